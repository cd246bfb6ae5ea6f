#include "poolcore/sampling.hpp"

#include "poolcore/errors.hpp"
#include "poolcore/specfun.hpp"

#include <cmath>
#include <vector>

namespace poolcore {

std::size_t AlternativeSpec::n_alternative() const {
    return static_cast<std::size_t>(std::floor(static_cast<double>(m) * eta + 0.5));
}

void AlternativeSpec::validate() const {
    if (m < 1) throw DomainError("M must be at least 1");
    if (!(eta >= 0.0 && eta <= 1.0)) throw DomainError("eta must lie in [0,1]");
    if (!(alt.a > 0.0) || !(alt.b > 0.0) || !std::isfinite(alt.a) || !std::isfinite(alt.b)) {
        throw DomainError("beta shapes must be positive and finite");
    }
}

PValues gen_h0(std::size_t m, Rng& rng) {
    if (m < 1) throw DomainError("M must be at least 1");
    std::vector<double> v(m);
    for (double& x : v) x = uniform_open01(rng);
    return PValues(std::move(v));
}

PValues gen_h4(const divergence::BetaAlt& alt, std::size_t m, Rng& rng) {
    AlternativeSpec spec{1.0, alt, m};
    return gen_h3(spec, rng);
}

PValues gen_h3(const AlternativeSpec& spec, Rng& rng) {
    spec.validate();
    const std::size_t n_alt = spec.n_alternative();
    const bool uniform_alt = spec.alt.a == 1.0 && spec.alt.b == 1.0;
    std::vector<double> v(spec.m);
    for (std::size_t i = 0; i < spec.m; ++i) {
        if (i < n_alt && !uniform_alt) {
            v[i] = specfun::beta_sample(spec.alt.a, spec.alt.b, rng);
        } else {
            v[i] = uniform_open01(rng);
        }
    }
    return PValues(std::move(v));
}

AlternativeSpec spec_from_divergence(double eta, double target_divergence, double w, std::size_t m) {
    const double a = divergence::find_a(target_divergence, w);
    AlternativeSpec spec;
    spec.eta = eta;
    spec.m = m;
    spec.alt = divergence::BetaAlt::from_a_w(a, w);
    spec.validate();
    return spec;
}

}  // namespace poolcore
