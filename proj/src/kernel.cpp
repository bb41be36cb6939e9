#include "krr/kernel.hpp"

#include <cmath>

namespace krr {

namespace {

double horner(const std::vector<double>& coeffs, double t) {
    double acc = 0.0;
    for (std::size_t i = coeffs.size(); i-- > 0;) acc = acc * t + coeffs[i];
    return acc;
}

void check_dim(const KernelSpec& kernel, const Eigen::VectorXd& x, const char* who) {
    if (x.size() != kernel.ambient_dim())
        throw ValidationError(std::string(who) + ": point dimension mismatch");
}

} // namespace

std::int64_t KernelSpec::ambient_dim() const {
    if (auto* p = std::get_if<InnerProductPoly>(&v)) return p->d;
    if (auto* c = std::get_if<Conjugate>(&v)) return c->weights.cols();
    return std::get<LinearCov>(v).spectrum.finite_rank();
}

std::int64_t KernelSpec::feature_dim() const {
    if (auto* p = std::get_if<InnerProductPoly>(&v)) {
        std::int64_t count = 0;
        for (std::size_t i = 0; i < p->coeffs.size(); ++i)
            if (p->coeffs[i] > 0.0)
                count += (i == 0) ? 1
                                  : binomial_checked(p->d + static_cast<std::int64_t>(i) - 1,
                                                     static_cast<std::int64_t>(i));
        return count;
    }
    if (auto* c = std::get_if<Conjugate>(&v)) return c->weights.rows();
    return std::get<LinearCov>(v).spectrum.finite_rank();
}

KernelSpec make_poly_kernel(std::vector<double> coeffs, std::int64_t d) {
    if (d < 1) throw ValidationError("poly kernel: d must be >= 1");
    for (double a : coeffs)
        if (a < 0.0) throw ValidationError("poly kernel: coefficients must be nonnegative");
    return {InnerProductPoly{std::move(coeffs), d}};
}

KernelSpec make_conjugate_kernel(Eigen::MatrixXd weights, std::string activation) {
    if (weights.rows() < 1) throw ValidationError("conjugate kernel: need m >= 1 rows");
    activation_by_name(activation); // validates the id
    return {Conjugate{std::move(weights), std::move(activation)}};
}

KernelSpec make_linear_cov_kernel(SpectrumModel spectrum) {
    if (spectrum.has_tail())
        throw ValidationError("linear_cov kernel: spectrum must have finite rank");
    return {LinearCov{std::move(spectrum)}};
}

double kernel_eval(const KernelSpec& kernel, const Eigen::VectorXd& x,
                   const Eigen::VectorXd& y) {
    check_dim(kernel, x, "kernel_eval");
    check_dim(kernel, y, "kernel_eval");
    if (auto* p = std::get_if<InnerProductPoly>(&kernel.v))
        return horner(p->coeffs, x.dot(y) / static_cast<double>(p->d));
    if (auto* c = std::get_if<Conjugate>(&kernel.v)) {
        Activation act = activation_by_name(c->activation);
        Eigen::VectorXd sx = (c->weights * x).unaryExpr(act.fn);
        Eigen::VectorXd sy = (c->weights * y).unaryExpr(act.fn);
        return sx.dot(sy) / static_cast<double>(c->weights.rows());
    }
    const auto& lc = std::get<LinearCov>(kernel.v);
    double acc = 0.0;
    for (std::int64_t j = 1; j <= lc.spectrum.finite_rank(); ++j)
        acc += lc.spectrum.eigenvalue(j) * x[j - 1] * y[j - 1];
    return acc;
}

std::vector<MonomialIndex> graded_monomials(std::int64_t d, int L, std::int64_t max_count) {
    std::int64_t total = binomial_checked(d + L, L);
    if (total > max_count)
        throw ValidationError("graded_monomials: feature dimension cap exceeded");
    std::vector<MonomialIndex> out;
    out.reserve(static_cast<std::size_t>(total));
    out.push_back({});
    std::vector<int> combo;
    // monomials of degree exactly `deg`: nondecreasing variable tuples
    for (int deg = 1; deg <= L; ++deg) {
        combo.assign(static_cast<std::size_t>(deg), 0);
        while (true) {
            MonomialIndex m;
            m.degree = deg;
            for (int v : combo) {
                if (!m.terms.empty() && m.terms.back().first == v)
                    m.terms.back().second += 1;
                else
                    m.terms.emplace_back(v, 1);
            }
            double fact = 1.0;
            for (int i = 2; i <= deg; ++i) fact *= i;
            for (auto& [v, pow] : m.terms)
                for (int i = 2; i <= pow; ++i) fact /= i;
            m.multinomial = fact;
            out.push_back(std::move(m));
            // next nondecreasing tuple
            int pos = deg - 1;
            while (pos >= 0 && combo[static_cast<std::size_t>(pos)] == d - 1) --pos;
            if (pos < 0) break;
            int val = combo[static_cast<std::size_t>(pos)] + 1;
            for (int i = pos; i < deg; ++i) combo[static_cast<std::size_t>(i)] = val;
        }
    }
    return out;
}

Eigen::MatrixXd poly_feature_map(const InnerProductPoly& kernel, const Eigen::MatrixXd& X) {
    if (X.cols() != kernel.d) throw ValidationError("poly_feature_map: dimension mismatch");
    int L = static_cast<int>(kernel.coeffs.size()) - 1;
    auto monos = graded_monomials(kernel.d, L);
    std::vector<const MonomialIndex*> live;
    for (const auto& m : monos)
        if (kernel.coeffs[static_cast<std::size_t>(m.degree)] > 0.0) live.push_back(&m);
    Eigen::MatrixXd out(X.rows(), static_cast<Eigen::Index>(live.size()));
    for (std::size_t j = 0; j < live.size(); ++j) {
        const MonomialIndex& m = *live[j];
        double scale = std::sqrt(kernel.coeffs[static_cast<std::size_t>(m.degree)] *
                                 m.multinomial /
                                 std::pow(static_cast<double>(kernel.d), m.degree));
        Eigen::VectorXd col = Eigen::VectorXd::Constant(X.rows(), scale);
        for (auto [v, pow] : m.terms)
            for (int i = 0; i < pow; ++i) col.array() *= X.col(v).array();
        out.col(static_cast<Eigen::Index>(j)) = col;
    }
    return out;
}

Eigen::MatrixXd feature_map(const KernelSpec& kernel, const Eigen::MatrixXd& X) {
    if (auto* p = std::get_if<InnerProductPoly>(&kernel.v)) return poly_feature_map(*p, X);
    if (auto* c = std::get_if<Conjugate>(&kernel.v)) {
        Activation act = activation_by_name(c->activation);
        Eigen::MatrixXd s = (X * c->weights.transpose()).unaryExpr(act.fn);
        return s / std::sqrt(static_cast<double>(c->weights.rows()));
    }
    const auto& lc = std::get<LinearCov>(kernel.v);
    if (X.cols() != lc.spectrum.finite_rank())
        throw ValidationError("feature_map: dimension mismatch");
    Eigen::MatrixXd out = X;
    for (std::int64_t j = 1; j <= lc.spectrum.finite_rank(); ++j)
        out.col(j - 1) *= std::sqrt(lc.spectrum.eigenvalue(j));
    return out;
}

Eigen::MatrixXd gram(const KernelSpec& kernel, const Eigen::MatrixXd& X) {
    if (X.rows() < 1) throw ValidationError("gram: need at least one row");
    Eigen::Index N = X.rows();
    Eigen::MatrixXd K(N, N);
    if (auto* p = std::get_if<InnerProductPoly>(&kernel.v)) {
        if (X.cols() != p->d) throw ValidationError("gram: dimension mismatch");
        const double inv_d = 1.0 / static_cast<double>(p->d);
        for (Eigen::Index i = 0; i < N; ++i)
            for (Eigen::Index j = i; j < N; ++j) {
                double v = horner(p->coeffs, X.row(i).dot(X.row(j)) * inv_d);
                K(i, j) = v;
                K(j, i) = v;
            }
    } else {
        // conjugate and linear-cov kernels go through explicit features
        Eigen::MatrixXd phi = feature_map(kernel, X);
        for (Eigen::Index i = 0; i < N; ++i)
            for (Eigen::Index j = i; j < N; ++j) {
                double v = phi.row(i).dot(phi.row(j));
                K(i, j) = v;
                K(j, i) = v;
            }
    }
    if (!K.allFinite()) throw NumericalError("gram: non-finite kernel evaluation");
    return K;
}

double diag_concentration_stat(const KernelSpec& kernel, const Eigen::MatrixXd& X,
                               double reference) {
    if (!(reference > 0.0))
        throw ValidationError("diag_concentration_stat: reference must be positive");
    double worst = 0.0;
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
        Eigen::VectorXd x = X.row(i);
        worst = std::max(worst, std::abs(kernel_eval(kernel, x, x) - reference));
    }
    return worst / reference;
}

} // namespace krr
