#pragma once

#include "poolcore/divergence.hpp"
#include "poolcore/pooling.hpp"
#include "poolcore/rng.hpp"

#include <cstddef>

namespace poolcore {

/// H3/H4 generative setting: round(M·eta) tests follow the beta
/// alternative, the rest are uniform. eta = 0 is H0, eta = 1 is H4.
struct AlternativeSpec {
    double eta = 1.0;
    divergence::BetaAlt alt;
    std::size_t m = 1;

    /// round(M·eta) with halves rounded up.
    std::size_t n_alternative() const;
    void validate() const;
};

PValues gen_h4(const divergence::BetaAlt& alt, std::size_t m, Rng& rng);
/// Beta draws first, then uniforms.
PValues gen_h3(const AlternativeSpec& spec, Rng& rng);
/// M iid uniform draws on (0, 1).
PValues gen_h0(std::size_t m, Rng& rng);

/// Alternative with divergence `target_divergence` at this w.
/// Throws UnreachableDivergence if no representable a reaches it.
AlternativeSpec spec_from_divergence(double eta, double target_divergence, double w, std::size_t m);

}  // namespace poolcore
