#pragma once
#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "krr/errors.hpp"

namespace krr {

// One plateau of equal eigenvalues.
struct Plateau {
    double value = 0.0;
    std::int64_t multiplicity = 0;
};

// Analytic power-decay tail: sigma_j = scale * j^{-alpha} for j >= start_index,
// where j indexes the expanded eigenvalue sequence (so start_index is always
// one past the last head index).
struct PowerTail {
    double alpha = 0.0;
    std::int64_t start_index = 0;
    double scale = 0.0;
};

// Tail aggregates of the spectrum past an index k:
//   trace    = Tr(Gamma_{k+1:inf})
//   trace_sq = Tr(Gamma_{k+1:inf}^2)
//   op_norm  = sigma_{k+1}
// For power tails the traces carry a remainder half-width from the integral
// bracket around the truncated sum.
struct TailStats {
    double trace = 0.0;
    double trace_sq = 0.0;
    double op_norm = 0.0;
    double trace_err = 0.0;
    double trace_sq_err = 0.0;
};

// Ordered eigenvalue description of a kernel integral operator: a finite list
// of plateaus, optionally followed by an analytic power tail. The expanded
// sequence sigma_1 >= sigma_2 >= ... is strictly positive and nonincreasing;
// construction validates this.
class SpectrumModel {
public:
    SpectrumModel() = default;
    static SpectrumModel from_plateaus(std::vector<Plateau> head,
                                       std::optional<PowerTail> tail = std::nullopt);

    const std::vector<Plateau>& head() const { return head_; }
    const std::optional<PowerTail>& tail() const { return tail_; }

    std::int64_t head_rank() const { return head_rank_; }
    bool has_tail() const { return tail_.has_value(); }
    // Finite total rank; only meaningful when there is no tail.
    std::int64_t finite_rank() const { return head_rank_; }

    // sigma_j, 1-based; zero past the last representable index.
    double eigenvalue(std::int64_t j) const;

    // Sum of sigma_j over j in [1, k] (clipped to the representable range).
    double partial_trace(std::int64_t k) const;

    // Precomputed full-tail sums (from start_index to infinity); zero without a tail.
    double tail_trace_total() const { return tail_trace_total_; }
    double tail_trace_sq_total() const { return tail_trace_sq_total_; }
    double tail_trace_err() const { return tail_trace_err_; }
    double tail_trace_sq_err() const { return tail_trace_sq_err_; }

    nlohmann::json to_json() const;
    static SpectrumModel from_json(const nlohmann::json& doc);

    // Cutoff for truncated power-tail sums; remainder is bracketed by integrals.
    static constexpr std::int64_t kTailCutoff = 1000000;

private:
    std::vector<Plateau> head_;
    std::optional<PowerTail> tail_;
    std::int64_t head_rank_ = 0;
    std::vector<std::int64_t> cum_;  // cumulative multiplicities
    std::vector<double> cum_trace_;  // cumulative head traces
    double tail_trace_total_ = 0.0;
    double tail_trace_sq_total_ = 0.0;
    double tail_trace_err_ = 0.0;
    double tail_trace_sq_err_ = 0.0;
};

// Exact finite sums over the head; truncated sum plus integral remainder
// bracket (midpoint, stored half-width) for a power tail. k past the total
// rank gives all-zero stats.
TailStats tail_stats(const SpectrumModel& spec, std::int64_t k);

// Spectrum of the inner-product polynomial kernel h(<x,y>/d) with
// h(t) = sum_i coeffs[i] t^i, in the graded monomial proxy basis: level i has
// eigenvalue coeffs[i]/d^i and multiplicity equal to the number of monomials
// of degree exactly i (multinomial factors and the Gram-Schmidt conjugation
// are dropped as bounded). Levels with a zero coefficient are omitted.
SpectrumModel poly_plateau_spectrum(const std::vector<double>& coeffs, std::int64_t d);

// Sphere analog: level l has eigenvalue coeffs[l]/d^l (a proxy for the
// order-d^{-l} decay) and multiplicity sphere_harmonic_dim(d, l). Requires
// d >= 3.
SpectrumModel sphere_plateau_spectrum(const std::vector<double>& coeffs, std::int64_t d);

// dim of the space of degree-l homogeneous harmonic polynomials in d
// variables: C(d+l-1, l) - C(d+l-3, l-2). Throws on int64 overflow.
std::int64_t sphere_harmonic_dim(std::int64_t d, std::int64_t l);

// The sphere plateau proxy is only advertised for L*L! = O(d); callers report
// when this is violated.
bool sphere_regime_ok(std::int64_t d, std::int64_t degree);

// Checked binomial coefficient (throws NumericalError on int64 overflow).
std::int64_t binomial_checked(std::int64_t n, std::int64_t k);

// Compress a descending eigenvalue vector into plateaus, merging consecutive
// values whose relative gap is below rel_gap; plateau value is the group mean.
// Eigenvalues <= abs_floor are dropped.
SpectrumModel group_into_plateaus(const Eigen::VectorXd& descending, double rel_gap,
                                  double abs_floor = 0.0);

} // namespace krr
