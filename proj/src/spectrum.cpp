#include "krr/spectrum.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace krr {

namespace {

// Integral bracket for sum_{j>M} scale*j^{-p}: the sum lies between
// int_{M+1}^inf and int_M^inf of scale*x^{-p} dx. Returns (midpoint, half-width).
std::pair<double, double> power_remainder(double scale, double p, std::int64_t M) {
    double lo = scale * std::pow(static_cast<double>(M) + 1.0, 1.0 - p) / (p - 1.0);
    double hi = scale * std::pow(static_cast<double>(M), 1.0 - p) / (p - 1.0);
    return {0.5 * (lo + hi), 0.5 * (hi - lo)};
}

// sum_{j=a}^{b} scale*j^{-p}, direct loop (callers keep b - a modest).
double power_partial(double scale, double p, std::int64_t a, std::int64_t b) {
    double acc = 0.0;
    for (std::int64_t j = a; j <= b; ++j)
        acc += scale * std::pow(static_cast<double>(j), -p);
    return acc;
}

} // namespace

SpectrumModel SpectrumModel::from_plateaus(std::vector<Plateau> head,
                                           std::optional<PowerTail> tail) {
    SpectrumModel m;
    double prev = std::numeric_limits<double>::infinity();
    for (const Plateau& p : head) {
        if (!(p.value > 0.0) || !std::isfinite(p.value))
            throw ValidationError("SpectrumModel: plateau values must be positive finite");
        if (p.multiplicity <= 0)
            throw ValidationError("SpectrumModel: plateau multiplicities must be positive");
        if (p.value > prev)
            throw ValidationError("SpectrumModel: plateau values must be nonincreasing");
        prev = p.value;
        m.head_rank_ += p.multiplicity;
    }
    if (tail) {
        if (!(tail->alpha > 1.0))
            throw ValidationError("SpectrumModel: tail alpha must exceed 1");
        if (!(tail->scale > 0.0))
            throw ValidationError("SpectrumModel: tail scale must be positive");
        if (tail->start_index != m.head_rank_ + 1)
            throw ValidationError("SpectrumModel: tail start_index must be one past the head");
        double first = tail->scale * std::pow(static_cast<double>(tail->start_index), -tail->alpha);
        if (!head.empty() && first > head.back().value * (1.0 + 1e-12))
            throw ValidationError("SpectrumModel: tail must not exceed the smallest head eigenvalue");
    }
    m.head_ = std::move(head);
    m.tail_ = tail;
    m.cum_.reserve(m.head_.size());
    m.cum_trace_.reserve(m.head_.size());
    std::int64_t c = 0;
    double t = 0.0;
    for (const Plateau& p : m.head_) {
        c += p.multiplicity;
        t += p.value * static_cast<double>(p.multiplicity);
        m.cum_.push_back(c);
        m.cum_trace_.push_back(t);
    }
    if (m.tail_) {
        const PowerTail& pt = *m.tail_;
        std::int64_t M = pt.start_index + kTailCutoff;
        m.tail_trace_total_ = power_partial(pt.scale, pt.alpha, pt.start_index, M);
        auto [mid, err] = power_remainder(pt.scale, pt.alpha, M);
        m.tail_trace_total_ += mid;
        m.tail_trace_err_ = err;
        m.tail_trace_sq_total_ =
            power_partial(pt.scale * pt.scale, 2.0 * pt.alpha, pt.start_index, M);
        auto [mid2, err2] = power_remainder(pt.scale * pt.scale, 2.0 * pt.alpha, M);
        m.tail_trace_sq_total_ += mid2;
        m.tail_trace_sq_err_ = err2;
    }
    return m;
}

double SpectrumModel::eigenvalue(std::int64_t j) const {
    if (j < 1) throw ValidationError("SpectrumModel::eigenvalue: index is 1-based");
    if (j <= head_rank_) {
        auto it = std::lower_bound(cum_.begin(), cum_.end(), j);
        return head_[static_cast<std::size_t>(it - cum_.begin())].value;
    }
    if (tail_) return tail_->scale * std::pow(static_cast<double>(j), -tail_->alpha);
    return 0.0;
}

double SpectrumModel::partial_trace(std::int64_t k) const {
    if (k <= 0) return 0.0;
    double acc = 0.0;
    if (k >= head_rank_) {
        acc = cum_trace_.empty() ? 0.0 : cum_trace_.back();
    } else {
        auto it = std::lower_bound(cum_.begin(), cum_.end(), k);
        std::size_t i = static_cast<std::size_t>(it - cum_.begin());
        acc = (i == 0 ? 0.0 : cum_trace_[i - 1]);
        std::int64_t before = (i == 0 ? 0 : cum_[i - 1]);
        acc += head_[i].value * static_cast<double>(k - before);
    }
    if (tail_ && k >= tail_->start_index)
        acc += power_partial(tail_->scale, tail_->alpha, tail_->start_index, k);
    return acc;
}

TailStats tail_stats(const SpectrumModel& spec, std::int64_t k) {
    if (k < 0) throw ValidationError("tail_stats: k must be nonnegative");
    TailStats ts;
    // Head contributions past index k.
    for (std::size_t i = 0, seen = 0; i < spec.head().size(); ++i) {
        const Plateau& p = spec.head()[i];
        std::int64_t lo = static_cast<std::int64_t>(seen) + 1;
        std::int64_t hi = static_cast<std::int64_t>(seen) + p.multiplicity;
        seen = static_cast<std::size_t>(hi);
        std::int64_t count = hi - std::max(lo, k + 1) + 1;
        if (count <= 0) continue;
        ts.trace += p.value * static_cast<double>(count);
        ts.trace_sq += p.value * p.value * static_cast<double>(count);
    }
    if (spec.has_tail()) {
        const PowerTail& pt = *spec.tail();
        std::int64_t from = std::max(k + 1, pt.start_index);
        // total from start_index minus the part [start_index, from-1]
        double head_part = 0.0, head_part_sq = 0.0;
        for (std::int64_t j = pt.start_index; j < from; ++j) {
            double s = pt.scale * std::pow(static_cast<double>(j), -pt.alpha);
            head_part += s;
            head_part_sq += s * s;
        }
        ts.trace += spec.tail_trace_total() - head_part;
        ts.trace_sq += spec.tail_trace_sq_total() - head_part_sq;
        ts.trace_err = spec.tail_trace_err();
        ts.trace_sq_err = spec.tail_trace_sq_err();
    }
    ts.op_norm = (k + 1 <= spec.head_rank() || spec.has_tail()) ? spec.eigenvalue(k + 1) : 0.0;
    return ts;
}

std::int64_t binomial_checked(std::int64_t n, std::int64_t k) {
    if (k < 0 || n < 0 || k > n) return 0;
    if (k > n - k) k = n - k;
    __int128 acc = 1;
    for (std::int64_t i = 1; i <= k; ++i) {
        acc = acc * (n - k + i) / i;
        if (acc > static_cast<__int128>(std::numeric_limits<std::int64_t>::max()))
            throw NumericalError("binomial_checked: int64 overflow");
    }
    return static_cast<std::int64_t>(acc);
}

SpectrumModel poly_plateau_spectrum(const std::vector<double>& coeffs, std::int64_t d) {
    if (coeffs.size() < 2)
        throw ValidationError("poly_plateau_spectrum: need degree L >= 1");
    if (d < 1) throw ValidationError("poly_plateau_spectrum: d must be at least 1");
    bool any = false;
    for (double a : coeffs) {
        if (a < 0.0) throw ValidationError("poly_plateau_spectrum: coefficients must be nonnegative");
        if (a > 0.0) any = true;
    }
    if (!any) throw ValidationError("poly_plateau_spectrum: all coefficients are zero (empty spectrum)");
    std::vector<Plateau> head;
    for (std::size_t i = 0; i < coeffs.size(); ++i) {
        if (coeffs[i] == 0.0) continue;
        double value = coeffs[i] / std::pow(static_cast<double>(d), static_cast<double>(i));
        // number of monomials of total degree exactly i in d variables
        std::int64_t mult =
            (i == 0) ? 1 : binomial_checked(d + static_cast<std::int64_t>(i) - 1,
                                            static_cast<std::int64_t>(i));
        head.push_back({value, mult});
    }
    return SpectrumModel::from_plateaus(std::move(head));
}

std::int64_t sphere_harmonic_dim(std::int64_t d, std::int64_t l) {
    if (d < 2) throw ValidationError("sphere_harmonic_dim: need d >= 2");
    if (l < 0) throw ValidationError("sphere_harmonic_dim: need l >= 0");
    if (l == 0) return 1;
    std::int64_t a = binomial_checked(d + l - 1, l);
    std::int64_t b = (l >= 2) ? binomial_checked(d + l - 3, l - 2) : 0;
    return a - b;
}

bool sphere_regime_ok(std::int64_t d, std::int64_t degree) {
    double fact = 1.0;
    for (std::int64_t i = 2; i <= degree; ++i) fact *= static_cast<double>(i);
    return static_cast<double>(degree) * fact <= static_cast<double>(d);
}

SpectrumModel sphere_plateau_spectrum(const std::vector<double>& coeffs, std::int64_t d) {
    if (d < 3) throw ValidationError("sphere_plateau_spectrum: requires d >= 3");
    if (coeffs.empty()) throw ValidationError("sphere_plateau_spectrum: no coefficients");
    bool any = false;
    for (double a : coeffs) {
        if (a < 0.0) throw ValidationError("sphere_plateau_spectrum: coefficients must be nonnegative");
        if (a > 0.0) any = true;
    }
    if (!any) throw ValidationError("sphere_plateau_spectrum: all coefficients are zero");
    std::vector<Plateau> head;
    for (std::size_t l = 0; l < coeffs.size(); ++l) {
        if (coeffs[l] == 0.0) continue;
        double value = coeffs[l] / std::pow(static_cast<double>(d), static_cast<double>(l));
        head.push_back({value, sphere_harmonic_dim(d, static_cast<std::int64_t>(l))});
    }
    return SpectrumModel::from_plateaus(std::move(head));
}

SpectrumModel group_into_plateaus(const Eigen::VectorXd& descending, double rel_gap,
                                  double abs_floor) {
    std::vector<Plateau> head;
    std::vector<double> group;
    auto flush = [&]() {
        if (group.empty()) return;
        double mean = 0.0;
        for (double v : group) mean += v;
        mean /= static_cast<double>(group.size());
        head.push_back({mean, static_cast<std::int64_t>(group.size())});
        group.clear();
    };
    for (Eigen::Index i = 0; i < descending.size(); ++i) {
        double v = descending[i];
        if (!(v > abs_floor)) break;  // sorted descending, rest are smaller
        if (!group.empty() && group.back() > v * (1.0 + rel_gap)) flush();
        group.push_back(v);
    }
    flush();
    // group means can end up marginally out of order; clamp to nonincreasing
    for (std::size_t i = 1; i < head.size(); ++i)
        head[i].value = std::min(head[i].value, head[i - 1].value);
    if (head.empty()) throw ValidationError("group_into_plateaus: no positive eigenvalues");
    return SpectrumModel::from_plateaus(std::move(head));
}

nlohmann::json SpectrumModel::to_json() const {
    nlohmann::json doc;
    doc["head"] = nlohmann::json::array();
    for (const Plateau& p : head_)
        doc["head"].push_back(nlohmann::json::array({p.value, p.multiplicity}));
    if (tail_) {
        doc["tail"] = {{"alpha", tail_->alpha},
                       {"start", tail_->start_index},
                       {"scale", tail_->scale}};
    } else {
        doc["tail"] = nullptr;
    }
    return doc;
}

SpectrumModel SpectrumModel::from_json(const nlohmann::json& doc) {
    if (!doc.is_object() || !doc.contains("head"))
        throw ValidationError("SpectrumModel JSON: expected {head, tail}");
    std::vector<Plateau> head;
    for (const auto& entry : doc.at("head")) {
        if (!entry.is_array() || entry.size() != 2)
            throw ValidationError("SpectrumModel JSON: head entries are [value, mult]");
        head.push_back({entry[0].get<double>(), entry[1].get<std::int64_t>()});
    }
    std::optional<PowerTail> tail;
    if (doc.contains("tail") && !doc.at("tail").is_null()) {
        const auto& t = doc.at("tail");
        tail = PowerTail{t.at("alpha").get<double>(), t.at("start").get<std::int64_t>(),
                         t.at("scale").get<double>()};
    }
    return from_plateaus(std::move(head), tail);
}

} // namespace krr
