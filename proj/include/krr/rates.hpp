#pragma once
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "krr/spectrum.hpp"

namespace krr {

// Embedding index condition ||f||_inf <= C ||f||_H^theta ||f||_L2^{1-theta}.
struct EmbeddingIndex {
    double theta = 0.0;
    double c_emb = 1.0;
};

// All theorem constants default to 1; experiments fit a single multiplicative
// constant instead of tracking them.
struct RateConfig {
    double kappa_dm = 1.0;
    double c_rip = 1.0;
    double c_kappa_rip = 1.0;
    std::optional<EmbeddingIndex> embedding;
};

enum class Regime { Standard, LargeRegularization };

// The five rate terms, the regime branch, and the max-composed rate r*.
// In the standard regime r* = max of all five terms; in the
// large-regularization regime (sigma_1 N <= kappa_dm (4 lambda + tail trace),
// boundary included) term_var_j2 is not part of the branch and r* is the max
// of the other four.
struct RateReport {
    std::int64_t k = 0;
    double lambda = 0.0;
    Regime regime = Regime::Standard;
    std::int64_t j1_size = 0;
    double j2_sigma_sum = 0.0;
    double term_var_head = 0.0;
    double term_var_j2 = 0.0;
    double term_bias_tail = 0.0;
    double term_bias_head = 0.0;
    double term_noise_absorb = 0.0;
    double r_star = 0.0;
    double dm_dimension = 0.0; // +inf encoded as infinity()
    bool admissible = false;
    std::string reason;

    nlohmann::json to_json() const;
    static std::string csv_header();
    std::string csv_row(std::int64_t N, double sigma_xi) const;
};

// (Tr(Gamma_{k+1:inf}) + lambda) / ||Gamma_{k+1:inf}||_op. Returns +inf when
// the tail vanishes and lambda > 0; throws when both vanish.
double dm_dimension(const SpectrumModel& spec, std::int64_t k, double lambda);

// J1 = { j <= k : sigma_j >= kappa_dm (4 lambda + tail trace)/N } (boundary
// included); returns (|J1|, sum of sigma_j over J2).
std::pair<std::int64_t, double> partition_J(const SpectrumModel& spec, std::int64_t k,
                                            double lambda, std::int64_t N, const RateConfig& cfg);

// sqrt( sum_{j<=k} c_j^2 / (sigma_j v threshold) ) with the J1 threshold.
double thresholded_head_norm(const SpectrumModel& spec, const std::vector<double>& coeffs,
                             std::int64_t k, double lambda, std::int64_t N, const RateConfig& cfg);

RateReport rate_report(const SpectrumModel& spec, const std::vector<double>& coeffs,
                       double sigma_xi, std::int64_t N, double lambda, std::int64_t k,
                       const RateConfig& cfg, std::optional<double> fixed_point = std::nullopt);

struct AdmissibleEntry {
    std::int64_t k = 0;
    std::string reason;
};

// k is admissible when N <= kappa_dm * dm_dimension(k, lambda) and either
// k <= c_rip N, or the k > N branch conditions hold (the case-split trace
// inequality plus kappa_dm (4 lambda + tail trace) >= N R_N^2, with R_N
// either supplied or computed from the embedding config). Scan is capped at
// the finite rank, or 4N for unbounded spectra.
std::vector<AdmissibleEntry> admissible_k(const SpectrumModel& spec, std::int64_t N,
                                          double lambda, const RateConfig& cfg,
                                          std::optional<double> fixed_point = std::nullopt);

// Smallest admissible k attaining the minimal r*; throws on an empty
// admissible set.
std::pair<std::int64_t, RateReport> optimal_k(const SpectrumModel& spec,
                                              const std::vector<double>& coeffs, double sigma_xi,
                                              std::int64_t N, double lambda,
                                              const RateConfig& cfg);

// min{ k : (lambda + tail trace)/op norm >= b N }, scanning upward; nullopt
// means the infimum of the empty set (infinite).
std::optional<std::int64_t> k_b_star(const SpectrumModel& spec, double lambda, double b,
                                     std::int64_t N);

// Upper estimate of the RIP fixed point R_N under the embedding index
// condition; requires cfg.embedding.
double rip_fixed_point(const SpectrumModel& spec, std::int64_t k, std::int64_t N,
                       const RateConfig& cfg);

// Classical oracle-inequality bound (squared error scale):
// (1 + Tr(Gamma)/lambda)^2 inf_f { ||f - f*||_L2^2 + (lambda/N)||f||_H^2 }
//   + (sigma_xi^2/N) Tr(Gamma (Gamma + lambda/N)^{-1}),
// with the infimum in closed form per eigen-coordinate. Requires lambda > 0.
double classical_bound(const SpectrumModel& spec, const std::vector<double>& coeffs,
                       double sigma_xi, std::int64_t N, double lambda);

// k = round(N^{1/(1+(s^2)alpha)}), lambda = N sigma_k for the power-decay
// spectrum sigma_j = j^{-alpha}; requires (s^2) alpha > 1 (s^2 = min(s,2)).
std::pair<std::int64_t, double> power_decay_prescription(double alpha, double s, std::int64_t N);

} // namespace krr
