#include "krr/rates.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "krr/csv.hpp"
#include "krr/errors.hpp"

namespace krr {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// sum_{j>k} sigma_j c_j^2 over the coefficient range
double tail_bias_sq(const SpectrumModel& spec, const std::vector<double>& coeffs,
                    std::int64_t k) {
    double acc = 0.0;
    for (std::size_t i = static_cast<std::size_t>(std::max<std::int64_t>(k, 0));
         i < coeffs.size(); ++i)
        acc += spec.eigenvalue(static_cast<std::int64_t>(i) + 1) * coeffs[i] * coeffs[i];
    return acc;
}

double coeff_norm_sq_head(const std::vector<double>& coeffs, std::int64_t k) {
    double acc = 0.0;
    for (std::size_t i = 0; i < coeffs.size() && static_cast<std::int64_t>(i) < k; ++i)
        acc += coeffs[i] * coeffs[i];
    return acc;
}

std::int64_t representable_rank(const SpectrumModel& spec, std::int64_t N) {
    return spec.has_tail() ? std::max<std::int64_t>(4 * N, spec.head_rank()) : spec.head_rank();
}

} // namespace

double dm_dimension(const SpectrumModel& spec, std::int64_t k, double lambda) {
    if (k < 0) throw ValidationError("dm_dimension: k must be nonnegative");
    if (lambda < 0.0) throw ValidationError("dm_dimension: lambda must be nonnegative");
    TailStats ts = tail_stats(spec, k);
    if (ts.op_norm == 0.0) {
        if (lambda > 0.0) return kInf;
        throw ValidationError("dm_dimension: undefined at k = total rank with lambda = 0");
    }
    return (ts.trace + lambda) / ts.op_norm;
}

std::pair<std::int64_t, double> partition_J(const SpectrumModel& spec, std::int64_t k,
                                            double lambda, std::int64_t N,
                                            const RateConfig& cfg) {
    if (k < 0 || N < 1) throw ValidationError("partition_J: need k >= 0 and N >= 1");
    TailStats ts = tail_stats(spec, k);
    double threshold = cfg.kappa_dm * (4.0 * lambda + ts.trace) / static_cast<double>(N);
    std::int64_t j1 = 0;
    double j2_sum = 0.0;
    for (std::int64_t j = 1; j <= k; ++j) {
        double s = spec.eigenvalue(j);
        if (s >= threshold)
            ++j1;
        else
            j2_sum += s;
    }
    return {j1, j2_sum};
}

double thresholded_head_norm(const SpectrumModel& spec, const std::vector<double>& coeffs,
                             std::int64_t k, double lambda, std::int64_t N,
                             const RateConfig& cfg) {
    TailStats ts = tail_stats(spec, k);
    double threshold = cfg.kappa_dm * (4.0 * lambda + ts.trace) / static_cast<double>(N);
    double acc = 0.0;
    for (std::size_t i = 0; i < coeffs.size() && static_cast<std::int64_t>(i) < k; ++i) {
        double denom = std::max(spec.eigenvalue(static_cast<std::int64_t>(i) + 1), threshold);
        if (denom > 0.0) acc += coeffs[i] * coeffs[i] / denom;
    }
    return std::sqrt(acc);
}

RateReport rate_report(const SpectrumModel& spec, const std::vector<double>& coeffs,
                       double sigma_xi, std::int64_t N, double lambda, std::int64_t k,
                       const RateConfig& cfg, std::optional<double> fixed_point) {
    if (lambda < 0.0) throw ValidationError("rate_report: lambda must be nonnegative");
    if (N < 1) throw ValidationError("rate_report: need N >= 1");
    if (k < 0) throw ValidationError("rate_report: k must be nonnegative");

    RateReport rep;
    rep.k = k;
    rep.lambda = lambda;

    TailStats ts = tail_stats(spec, k);
    const double denom4 = 4.0 * lambda + ts.trace;
    const double sigma1 = (spec.head_rank() > 0 || spec.has_tail()) ? spec.eigenvalue(1) : 0.0;
    rep.regime = (sigma1 * static_cast<double>(N) <= cfg.kappa_dm * denom4)
                     ? Regime::LargeRegularization
                     : Regime::Standard;

    auto [j1, j2_sum] = partition_J(spec, k, lambda, N, cfg);
    rep.j1_size = j1;
    rep.j2_sigma_sum = j2_sum;

    const double bias_tail = std::sqrt(tail_bias_sq(spec, coeffs, k));
    if (rep.regime == Regime::Standard) {
        rep.term_var_head = sigma_xi * std::sqrt(static_cast<double>(j1) / N);
        rep.term_var_j2 =
            (j2_sum > 0.0 && denom4 > 0.0) ? sigma_xi * std::sqrt(j2_sum / denom4) : 0.0;
        rep.term_bias_tail = bias_tail;
        rep.term_bias_head = thresholded_head_norm(spec, coeffs, k, lambda, N, cfg) *
                             (2.0 * lambda + 3.0 * ts.trace) / static_cast<double>(N);
    } else {
        double head_trace = spec.partial_trace(k);
        rep.term_var_head =
            (denom4 > 0.0) ? sigma_xi * std::sqrt(head_trace / denom4) : 0.0;
        rep.term_var_j2 = 0.0;
        rep.term_bias_tail =
            (denom4 > 0.0) ? std::sqrt(sigma1 * static_cast<double>(N) / denom4) * bias_tail
                           : 0.0;
        rep.term_bias_head =
            std::sqrt(coeff_norm_sq_head(coeffs, k)) * std::sqrt(denom4 / static_cast<double>(N));
    }
    rep.term_noise_absorb =
        (lambda + ts.trace > 0.0)
            ? sigma_xi * std::sqrt(static_cast<double>(N) * ts.trace_sq) / (lambda + ts.trace)
            : 0.0;
    rep.r_star = std::max({rep.term_var_head, rep.term_var_j2, rep.term_bias_tail,
                           rep.term_bias_head, rep.term_noise_absorb});

    // admissibility, reported inline
    if (ts.op_norm == 0.0 && lambda == 0.0) {
        rep.dm_dimension = std::numeric_limits<double>::quiet_NaN();
        rep.admissible = false;
        rep.reason = "dm_undefined";
        return rep;
    }
    rep.dm_dimension = dm_dimension(spec, k, lambda);
    if (static_cast<double>(N) > cfg.kappa_dm * rep.dm_dimension) {
        rep.admissible = false;
        rep.reason = "dm_failed";
        return rep;
    }
    if (static_cast<double>(k) <= cfg.c_rip * static_cast<double>(N)) {
        rep.admissible = true;
        rep.reason = "rip_small_k";
        return rep;
    }
    // k > c_rip N branch: case-split trace condition plus the RIP fixed point
    bool extra_ok;
    if (sigma1 * static_cast<double>(N) >= cfg.kappa_dm * denom4)
        extra_ok = j2_sum <= cfg.kappa_dm * denom4 * (1.0 - static_cast<double>(j1) / N);
    else
        extra_ok = spec.partial_trace(k) <= static_cast<double>(N) * sigma1;
    if (!extra_ok) {
        rep.admissible = false;
        rep.reason = "extra_condition_failed";
        return rep;
    }
    std::optional<double> rn = fixed_point;
    if (!rn && cfg.embedding) rn = rip_fixed_point(spec, k, N, cfg);
    if (!rn) {
        rep.admissible = false;
        rep.reason = "rip_fixed_point_unavailable";
        return rep;
    }
    if (cfg.kappa_dm * denom4 >= static_cast<double>(N) * (*rn) * (*rn)) {
        rep.admissible = true;
        rep.reason = "rip_large_k";
    } else {
        rep.admissible = false;
        rep.reason = "rip_fixed_point_failed";
    }
    return rep;
}

std::vector<AdmissibleEntry> admissible_k(const SpectrumModel& spec, std::int64_t N,
                                          double lambda, const RateConfig& cfg,
                                          std::optional<double> fixed_point) {
    std::vector<AdmissibleEntry> out;
    const std::vector<double> no_coeffs;
    std::int64_t kmax = representable_rank(spec, N);
    for (std::int64_t k = 0; k <= kmax; ++k) {
        RateReport rep = rate_report(spec, no_coeffs, 0.0, N, lambda, k, cfg, fixed_point);
        if (rep.admissible) out.push_back({k, rep.reason});
    }
    return out;
}

std::pair<std::int64_t, RateReport> optimal_k(const SpectrumModel& spec,
                                              const std::vector<double>& coeffs,
                                              double sigma_xi, std::int64_t N, double lambda,
                                              const RateConfig& cfg) {
    std::int64_t best_k = -1;
    RateReport best;
    std::int64_t kmax = representable_rank(spec, N);
    for (std::int64_t k = 0; k <= kmax; ++k) {
        RateReport rep = rate_report(spec, coeffs, sigma_xi, N, lambda, k, cfg);
        if (!rep.admissible) continue;
        if (best_k < 0 || rep.r_star < best.r_star) {
            best_k = k;
            best = rep;
        }
    }
    if (best_k < 0) throw ValidationError("optimal_k: admissible set is empty");
    return {best_k, best};
}

std::optional<std::int64_t> k_b_star(const SpectrumModel& spec, double lambda, double b,
                                     std::int64_t N) {
    if (!(b > 0.0)) throw ValidationError("k_b_star: b must be positive");
    std::int64_t kmax = representable_rank(spec, N);
    for (std::int64_t k = 0; k <= kmax; ++k) {
        TailStats ts = tail_stats(spec, k);
        if (ts.op_norm == 0.0) {
            if (lambda > 0.0) return k;  // ratio is +inf
            return std::nullopt;
        }
        if ((lambda + ts.trace) / ts.op_norm >= b * static_cast<double>(N)) return k;
    }
    return std::nullopt;
}

double rip_fixed_point(const SpectrumModel& spec, std::int64_t k, std::int64_t N,
                       const RateConfig& cfg) {
    if (!cfg.embedding) throw ValidationError("rip_fixed_point: embedding parameters missing");
    const double theta = cfg.embedding->theta;
    const double C = cfg.embedding->c_emb;
    const double c2 = cfg.c_kappa_rip * cfg.c_kappa_rip;
    if (theta < 0.0 || theta > 1.0)
        throw ValidationError("rip_fixed_point: theta must lie in [0, 1]");
    const double logN = std::log(static_cast<double>(N));
    const double budget = c2 / C * static_cast<double>(N) / (logN * logN);

    if (theta == 0.0) {
        if (static_cast<double>(k) <= budget) return 0.0;
        // middle case: a k0 with a flat-enough tail pins R at sigma_{k0}
        double nloglinear = c2 / C * static_cast<double>(N) / logN;
        std::int64_t k0_cap = std::min<std::int64_t>(k, N);
        double best = kInf;
        for (std::int64_t k0 = 1; k0 <= k0_cap; ++k0) {
            TailStats ts = tail_stats(spec, k0 - 1); // sum_{j >= k0}
            double budget_k0 = nloglinear - static_cast<double>(k0) + 1.0;
            if (budget_k0 > 0.0 && ts.trace <= budget_k0 * spec.eigenvalue(k0))
                best = spec.eigenvalue(k0);
        }
        if (std::isfinite(best)) return best;
        return std::sqrt(C) / cfg.c_kappa_rip * std::sqrt(spec.partial_trace(k)) * logN /
               std::sqrt(static_cast<double>(N));
    }

    double crit_sum = 0.0, generic_sum = 0.0;
    for (std::int64_t j = 1; j <= k; ++j) {
        double s = spec.eigenvalue(j);
        if (s <= 0.0) break;
        crit_sum += std::pow(s, -theta);
        generic_sum += std::pow(s, 1.0 - theta);
    }
    if (crit_sum <= budget) return 0.0;
    return std::sqrt(C / c2 * generic_sum / static_cast<double>(N)) * logN;
}

double classical_bound(const SpectrumModel& spec, const std::vector<double>& coeffs,
                       double sigma_xi, std::int64_t N, double lambda) {
    if (!(lambda > 0.0)) throw ValidationError("classical_bound: requires lambda > 0");
    if (N < 1) throw ValidationError("classical_bound: need N >= 1");
    TailStats full = tail_stats(spec, 0);
    const double ratio = lambda / static_cast<double>(N);

    double inf_term = 0.0;
    for (std::size_t i = 0; i < coeffs.size(); ++i) {
        double s = spec.eigenvalue(static_cast<std::int64_t>(i) + 1);
        if (s <= 0.0) break;
        inf_term += coeffs[i] * coeffs[i] * s * ratio / (s + ratio);
    }

    // effective dimension Tr(Gamma (Gamma + lambda/N)^{-1})
    double eff = 0.0;
    for (const Plateau& p : spec.head())
        eff += static_cast<double>(p.multiplicity) * p.value / (p.value + ratio);
    if (spec.has_tail()) {
        const PowerTail& t = *spec.tail();
        std::int64_t M = t.start_index + SpectrumModel::kTailCutoff;
        for (std::int64_t j = t.start_index; j <= M; ++j) {
            double s = t.scale * std::pow(static_cast<double>(j), -t.alpha);
            eff += s / (s + ratio);
        }
        // remainder bounded by sum of sigma_j / ratio
        eff += t.scale * std::pow(static_cast<double>(M), 1.0 - t.alpha) / (t.alpha - 1.0) / ratio;
    }

    double factor = 1.0 + full.trace / lambda;
    return factor * factor * inf_term + sigma_xi * sigma_xi / static_cast<double>(N) * eff;
}

std::pair<std::int64_t, double> power_decay_prescription(double alpha, double s,
                                                         std::int64_t N) {
    double s2 = std::min(s, 2.0);
    if (!(s2 * alpha > 1.0))
        throw ValidationError("power_decay_prescription: requires (s ^ 2) * alpha > 1");
    if (N < 1) throw ValidationError("power_decay_prescription: need N >= 1");
    double expo = 1.0 / (1.0 + s2 * alpha);
    std::int64_t k = std::llround(std::pow(static_cast<double>(N), expo));
    k = std::max<std::int64_t>(k, 1);
    double lambda = static_cast<double>(N) * std::pow(static_cast<double>(k), -alpha);
    return {k, lambda};
}

nlohmann::json RateReport::to_json() const {
    nlohmann::json doc;
    doc["k"] = k;
    doc["lambda"] = lambda;
    doc["regime"] = regime == Regime::Standard ? "standard" : "large_regularization";
    doc["j1_size"] = j1_size;
    doc["j2_sigma_sum"] = j2_sigma_sum;
    doc["term_var_head"] = term_var_head;
    doc["term_var_j2"] = term_var_j2;
    doc["term_bias_tail"] = term_bias_tail;
    doc["term_bias_head"] = term_bias_head;
    doc["term_noise_absorb"] = term_noise_absorb;
    doc["r_star"] = r_star;
    if (std::isfinite(dm_dimension))
        doc["dm_dimension"] = dm_dimension;
    else
        doc["dm_dimension"] = std::isnan(dm_dimension) ? "undefined" : "inf";
    doc["admissible"] = admissible;
    doc["reason"] = reason;
    return doc;
}

std::string RateReport::csv_header() {
    return "N,lambda,k,sigma_xi,regime,j1_size,j2_sigma_sum,term_var_head,term_var_j2,"
           "term_bias_tail,term_bias_head,term_noise_absorb,r_star,dm_dimension,admissible,"
           "reason";
}

std::string RateReport::csv_row(std::int64_t N, double sigma_xi) const {
    std::ostringstream os;
    os << N << ',' << format_double(lambda) << ',' << k << ',' << format_double(sigma_xi) << ','
       << (regime == Regime::Standard ? "standard" : "large_regularization") << ',' << j1_size
       << ',' << format_double(j2_sigma_sum) << ',' << format_double(term_var_head) << ','
       << format_double(term_var_j2) << ',' << format_double(term_bias_tail) << ','
       << format_double(term_bias_head) << ',' << format_double(term_noise_absorb) << ','
       << format_double(r_star) << ',' << format_double(dm_dimension) << ','
       << (admissible ? 1 : 0) << ',' << reason;
    return os.str();
}

} // namespace krr
