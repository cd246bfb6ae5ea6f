#pragma once

#include <cmath>
#include <cstddef>

namespace poolcore::root {

struct BisectResult {
    double lo;
    double hi;
    std::size_t iterations;
};

/// Shrinks [lo, hi] around the boundary of a monotone predicate.
///
/// `pred(lo)` is assumed true and `pred(hi)` false (or the reverse, the loop
/// only tracks which end each midpoint replaces). Stops when the bracket is
/// narrower than `tol` or when the midpoint no longer separates the ends.
template <class Pred>
BisectResult bisect_predicate(Pred&& pred, double lo, double hi, double tol, std::size_t max_iter = 2000) {
    std::size_t it = 0;
    for (; it < max_iter && hi - lo > tol; ++it) {
        const double mid = lo + 0.5 * (hi - lo);
        if (mid <= lo || mid >= hi) break;
        if (pred(mid)) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return {lo, hi, it};
}

/// Root of an increasing function f on [lo, hi] with f(lo) <= 0 <= f(hi).
template <class F>
double bisect_increasing(F&& f, double lo, double hi, double tol, std::size_t max_iter = 2000) {
    auto r = bisect_predicate([&](double x) { return f(x) <= 0.0; }, lo, hi, tol, max_iter);
    return 0.5 * (r.lo + r.hi);
}

}  // namespace poolcore::root
