#include "krr/config.hpp"

#include <fstream>
#include <set>

#include "krr/csv.hpp"
#include "krr/errors.hpp"

namespace krr {

namespace {

using nlohmann::json;

void reject_unknown(const json& obj, const std::set<std::string>& allowed,
                    const std::string& where) {
    for (auto it = obj.begin(); it != obj.end(); ++it)
        if (!allowed.count(it.key()))
            throw ValidationError("config: unknown key '" + it.key() + "' in " + where);
}

Eigen::VectorXd parse_vector(const json& arr, const std::string& where) {
    if (!arr.is_array()) throw ValidationError("config: " + where + " must be an array");
    Eigen::VectorXd v(arr.size());
    for (std::size_t i = 0; i < arr.size(); ++i) v[static_cast<Eigen::Index>(i)] = arr[i].get<double>();
    return v;
}

KernelSpec parse_kernel(const json& doc) {
    if (!doc.is_object() || !doc.contains("type"))
        throw ValidationError("config: kernel needs a 'type'");
    std::string type = doc.at("type").get<std::string>();
    if (type == "inner_product_poly") {
        reject_unknown(doc, {"type", "coeffs", "d"}, "kernel");
        if (!doc.contains("coeffs") || !doc.contains("d"))
            throw ValidationError("config: inner_product_poly kernel needs 'coeffs' and 'd'");
        std::vector<double> coeffs = doc.at("coeffs").get<std::vector<double>>();
        return make_poly_kernel(std::move(coeffs), doc.at("d").get<std::int64_t>());
    }
    if (type == "conjugate") {
        reject_unknown(doc, {"type", "weights", "activation"}, "kernel");
        if (!doc.contains("weights") || !doc.contains("activation"))
            throw ValidationError("config: conjugate kernel needs 'weights' and 'activation'");
        const json& rows = doc.at("weights");
        if (!rows.is_array() || rows.empty())
            throw ValidationError("config: conjugate weights must be a nonempty array of rows");
        Eigen::MatrixXd W(rows.size(), rows[0].size());
        for (std::size_t i = 0; i < rows.size(); ++i) {
            if (rows[i].size() != rows[0].size())
                throw ValidationError("config: ragged conjugate weight rows");
            for (std::size_t j = 0; j < rows[i].size(); ++j)
                W(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                    rows[i][j].get<double>();
        }
        return make_conjugate_kernel(std::move(W), doc.at("activation").get<std::string>());
    }
    if (type == "linear_cov") {
        reject_unknown(doc, {"type", "spectrum"}, "kernel");
        if (!doc.contains("spectrum"))
            throw ValidationError("config: linear_cov kernel needs 'spectrum'");
        return make_linear_cov_kernel(SpectrumModel::from_json(doc.at("spectrum")));
    }
    throw ValidationError("config: unknown kernel type '" + type + "'");
}

DesignSpec parse_design(const json& doc) {
    if (!doc.is_object() || !doc.contains("type"))
        throw ValidationError("config: design needs a 'type'");
    std::string type = doc.at("type").get<std::string>();
    if (type == "iid") {
        reject_unknown(doc, {"type", "marginal", "d"}, "design");
        std::string marginal = doc.value("marginal", std::string("gaussian"));
        Marginal m;
        if (marginal == "rademacher")
            m = Marginal::Rademacher;
        else if (marginal == "gaussian")
            m = Marginal::Gaussian;
        else if (marginal == "uniform_pm")
            m = Marginal::UniformPm;
        else
            throw ValidationError("config: unknown marginal '" + marginal + "'");
        return DesignSpec{IidCoordinates{m, doc.value("d", std::int64_t{0})}};
    }
    if (type == "sphere") {
        reject_unknown(doc, {"type", "d"}, "design");
        return DesignSpec{UniformSphere{doc.value("d", std::int64_t{0})}};
    }
    if (type == "gaussian_cov") {
        reject_unknown(doc, {"type", "spectrum"}, "design");
        if (!doc.contains("spectrum"))
            throw ValidationError("config: gaussian_cov design needs 'spectrum'");
        return DesignSpec{GaussianCov{SpectrumModel::from_json(doc.at("spectrum"))}};
    }
    throw ValidationError("config: unknown design type '" + type + "'");
}

TargetSpec parse_target(const json& doc) {
    if (!doc.is_object() || !doc.contains("type"))
        throw ValidationError("config: target needs a 'type'");
    std::string type = doc.at("type").get<std::string>();
    if (type == "eigen_coeffs") {
        reject_unknown(doc, {"type", "coeffs", "sparse"}, "target");
        if (doc.contains("sparse")) {
            // {"sparse": {"dim": p, "entries": [[index, value], ...]}}, 0-based
            const json& sp = doc.at("sparse");
            reject_unknown(sp, {"dim", "entries"}, "target.sparse");
            Eigen::VectorXd c = Eigen::VectorXd::Zero(sp.at("dim").get<std::int64_t>());
            for (const auto& e : sp.at("entries")) {
                std::int64_t idx = e.at(0).get<std::int64_t>();
                if (idx < 0 || idx >= c.size())
                    throw ValidationError("config: sparse target index out of range");
                c[idx] = e.at(1).get<double>();
            }
            return TargetSpec{EigenCoeffs{std::move(c)}};
        }
        if (!doc.contains("coeffs"))
            throw ValidationError("config: eigen_coeffs target needs 'coeffs' or 'sparse'");
        return TargetSpec{EigenCoeffs{parse_vector(doc.at("coeffs"), "target.coeffs")}};
    }
    if (type == "source_condition") {
        reject_unknown(doc, {"type", "s", "epsilon", "truncation"}, "target");
        SourceCondition sc;
        sc.s = doc.value("s", 1.0);
        sc.epsilon = doc.value("epsilon", 0.01);
        sc.truncation = doc.value("truncation", std::int64_t{10000});
        return TargetSpec{sc};
    }
    if (type == "single_neuron") {
        reject_unknown(doc, {"type", "a_star", "w_star", "activation"}, "target");
        SingleNeuron sn;
        sn.a_star = doc.value("a_star", 1.0);
        sn.activation = doc.value("activation", std::string("tanh"));
        if (doc.contains("w_star")) sn.w_star = parse_vector(doc.at("w_star"), "target.w_star");
        return TargetSpec{sn};
    }
    throw ValidationError("config: unknown target type '" + type + "'");
}

NoiseSpec parse_noise(const json& doc) {
    reject_unknown(doc, {"law", "sigma_xi"}, "noise");
    NoiseSpec n;
    std::string law = doc.value("law", std::string("gaussian"));
    if (law == "gaussian")
        n.law = NoiseSpec::Law::Gaussian;
    else if (law == "rademacher_scaled")
        n.law = NoiseSpec::Law::RademacherScaled;
    else
        throw ValidationError("config: unknown noise law '" + law + "'");
    n.sigma_xi = doc.value("sigma_xi", 0.0);
    if (n.sigma_xi < 0.0) throw ValidationError("config: sigma_xi must be nonnegative");
    return n;
}

RateConfig parse_rate_config(const json& doc) {
    reject_unknown(doc, {"kappa_dm", "c_rip", "c_kappa_rip", "embedding"}, "rate_config");
    RateConfig rc;
    rc.kappa_dm = doc.value("kappa_dm", 1.0);
    rc.c_rip = doc.value("c_rip", 1.0);
    rc.c_kappa_rip = doc.value("c_kappa_rip", 1.0);
    if (rc.kappa_dm <= 0.0 || rc.kappa_dm > 1.0)
        throw ValidationError("config: kappa_dm must lie in (0, 1]");
    if (rc.c_rip <= 0.0 || rc.c_rip > 1.0)
        throw ValidationError("config: c_rip must lie in (0, 1]");
    if (doc.contains("embedding") && !doc.at("embedding").is_null()) {
        const json& e = doc.at("embedding");
        reject_unknown(e, {"theta", "c_emb"}, "rate_config.embedding");
        EmbeddingIndex emb;
        emb.theta = e.value("theta", 0.0);
        emb.c_emb = e.value("c_emb", 1.0);
        if (emb.theta < 0.0 || emb.theta > 1.0)
            throw ValidationError("config: embedding theta must lie in [0, 1]");
        if (emb.c_emb <= 0.0) throw ValidationError("config: embedding c_emb must be positive");
        rc.embedding = emb;
    }
    return rc;
}

} // namespace

ExperimentConfig parse_config(const nlohmann::json& doc) {
    if (!doc.is_object()) throw ValidationError("config: top level must be an object");
    reject_unknown(doc,
                   {"experiment", "kernel", "design", "target", "noise", "sweep", "trials",
                    "trial_offset", "lambda_policy", "rate_config", "seed", "out", "threads",
                    "dump_designs", "n_test", "bracket_c", "b", "alpha", "s", "reference",
                    "alignment", "a_star", "activation", "m", "n2", "spectrum", "sigma_xi", "N",
                    "lambda", "k", "oracle", "oracle_samples", "design_file", "response_file"},
                   "top level");
    ExperimentConfig cfg;
    cfg.id = doc.value("experiment", std::string());
    if (doc.contains("kernel")) cfg.kernel = parse_kernel(doc.at("kernel"));
    if (doc.contains("design")) cfg.design = parse_design(doc.at("design"));
    if (doc.contains("target")) cfg.target = parse_target(doc.at("target"));
    if (doc.contains("noise")) cfg.noise = parse_noise(doc.at("noise"));
    if (doc.contains("sweep")) {
        const json& s = doc.at("sweep");
        reject_unknown(s, {"N", "d"}, "sweep");
        if (s.contains("N")) cfg.sweep.Ns = s.at("N").get<std::vector<std::int64_t>>();
        if (s.contains("d")) cfg.sweep.ds = s.at("d").get<std::vector<std::int64_t>>();
    }
    cfg.trials = doc.value("trials", std::int64_t{20});
    if (cfg.trials < 1) throw ValidationError("config: trials must be >= 1");
    cfg.trial_offset = doc.value("trial_offset", std::int64_t{0});
    if (doc.contains("lambda_policy")) {
        const json& lp = doc.at("lambda_policy");
        reject_unknown(lp, {"mode", "value"}, "lambda_policy");
        std::string mode = lp.value("mode", std::string("zero"));
        if (mode == "zero")
            cfg.lambda_policy.mode = LambdaPolicy::Mode::Zero;
        else if (mode == "fixed")
            cfg.lambda_policy.mode = LambdaPolicy::Mode::Fixed;
        else if (mode == "prescription")
            cfg.lambda_policy.mode = LambdaPolicy::Mode::Prescription;
        else
            throw ValidationError("config: unknown lambda policy '" + mode + "'");
        cfg.lambda_policy.value = lp.value("value", 0.0);
        if (cfg.lambda_policy.value < 0.0)
            throw ValidationError("config: lambda must be nonnegative");
    }
    if (doc.contains("rate_config")) cfg.rate_config = parse_rate_config(doc.at("rate_config"));
    cfg.seed = doc.value("seed", std::uint64_t{0});
    cfg.out_dir = doc.value("out", std::string());
    cfg.threads = doc.value("threads", std::int64_t{1});
    cfg.dump_designs = doc.value("dump_designs", false);
    cfg.n_test = doc.value("n_test", std::int64_t{10000});
    cfg.bracket_c = doc.value("bracket_c", std::int64_t{4});
    cfg.geq_b = doc.value("b", 0.25);
    cfg.smooth_alpha = doc.value("alpha", 2.0);
    cfg.smooth_s = doc.value("s", 1.0);
    if (doc.contains("reference")) cfg.diag_reference = doc.at("reference").get<double>();
    cfg.conj_alignment = doc.value("alignment", 1.0);
    cfg.conj_a_star = doc.value("a_star", 1.0);
    cfg.conj_activation = doc.value("activation", std::string("tanh"));
    cfg.conj_width = doc.value("m", std::int64_t{0});
    cfg.conj_n2 = doc.value("n2", std::int64_t{0});
    if (doc.contains("spectrum")) cfg.spectrum = SpectrumModel::from_json(doc.at("spectrum"));
    cfg.rate_sigma_xi = doc.value("sigma_xi", 0.0);
    cfg.rate_N = doc.value("N", std::int64_t{0});
    cfg.rate_lambda = doc.value("lambda", 0.0);
    if (doc.contains("k")) cfg.rate_k = doc.at("k").get<std::int64_t>();
    cfg.spectrum_oracle = doc.value("oracle", false);
    cfg.oracle_samples = doc.value("oracle_samples", std::int64_t{200000});
    if (doc.contains("design_file")) cfg.design_file = doc.at("design_file").get<std::string>();
    if (doc.contains("response_file"))
        cfg.response_file = doc.at("response_file").get<std::string>();
    cfg.fit_lambda = cfg.rate_lambda;
    return cfg;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("config: cannot open " + path);
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& err) {
        throw ValidationError("config: parse error in " + path + ": " + err.what());
    }
    return parse_config(doc);
}

nlohmann::json config_echo(const ExperimentConfig& cfg) {
    nlohmann::json doc;
    doc["experiment"] = cfg.id;
    if (cfg.kernel) {
        nlohmann::json k;
        if (auto* p = std::get_if<InnerProductPoly>(&cfg.kernel->v)) {
            k["type"] = "inner_product_poly";
            k["coeffs"] = p->coeffs;
            k["d"] = p->d;
        } else if (auto* c = std::get_if<Conjugate>(&cfg.kernel->v)) {
            k["type"] = "conjugate";
            k["activation"] = c->activation;
            auto rows = nlohmann::json::array();
            for (Eigen::Index i = 0; i < c->weights.rows(); ++i) {
                auto row = nlohmann::json::array();
                for (Eigen::Index j = 0; j < c->weights.cols(); ++j)
                    row.push_back(c->weights(i, j));
                rows.push_back(row);
            }
            k["weights"] = rows;
        } else {
            k["type"] = "linear_cov";
            k["spectrum"] = std::get<LinearCov>(cfg.kernel->v).spectrum.to_json();
        }
        doc["kernel"] = k;
    }
    if (cfg.design) {
        nlohmann::json d;
        if (auto* iid = std::get_if<IidCoordinates>(&cfg.design->v)) {
            d["type"] = "iid";
            d["marginal"] = iid->marginal == Marginal::Rademacher    ? "rademacher"
                            : iid->marginal == Marginal::Gaussian    ? "gaussian"
                                                                     : "uniform_pm";
            d["d"] = iid->d;
        } else if (auto* sph = std::get_if<UniformSphere>(&cfg.design->v)) {
            d["type"] = "sphere";
            d["d"] = sph->d;
        } else {
            d["type"] = "gaussian_cov";
            d["spectrum"] = std::get<GaussianCov>(cfg.design->v).spectrum.to_json();
        }
        doc["design"] = d;
    }
    if (cfg.target) {
        nlohmann::json t;
        if (auto* ec = std::get_if<EigenCoeffs>(&cfg.target->v)) {
            t["type"] = "eigen_coeffs";
            t["coeffs"] = std::vector<double>(ec->c.data(), ec->c.data() + ec->c.size());
        } else if (auto* sc = std::get_if<SourceCondition>(&cfg.target->v)) {
            t["type"] = "source_condition";
            t["s"] = sc->s;
            t["epsilon"] = sc->epsilon;
            t["truncation"] = sc->truncation;
        } else {
            const auto& sn = std::get<SingleNeuron>(cfg.target->v);
            t["type"] = "single_neuron";
            t["a_star"] = sn.a_star;
            t["activation"] = sn.activation;
            if (sn.w_star.size() > 0)
                t["w_star"] =
                    std::vector<double>(sn.w_star.data(), sn.w_star.data() + sn.w_star.size());
        }
        doc["target"] = t;
    }
    doc["noise"] = {
        {"law", cfg.noise.law == NoiseSpec::Law::Gaussian ? "gaussian" : "rademacher_scaled"},
        {"sigma_xi", cfg.noise.sigma_xi}};
    nlohmann::json sweep;
    sweep["N"] = cfg.sweep.Ns;
    sweep["d"] = cfg.sweep.ds;
    doc["sweep"] = sweep;
    doc["trials"] = cfg.trials;
    doc["trial_offset"] = cfg.trial_offset;
    doc["lambda_policy"] = {
        {"mode", cfg.lambda_policy.mode == LambdaPolicy::Mode::Zero      ? "zero"
                 : cfg.lambda_policy.mode == LambdaPolicy::Mode::Fixed   ? "fixed"
                                                                         : "prescription"},
        {"value", cfg.lambda_policy.value}};
    nlohmann::json rc;
    rc["kappa_dm"] = cfg.rate_config.kappa_dm;
    rc["c_rip"] = cfg.rate_config.c_rip;
    rc["c_kappa_rip"] = cfg.rate_config.c_kappa_rip;
    if (cfg.rate_config.embedding)
        rc["embedding"] = {{"theta", cfg.rate_config.embedding->theta},
                           {"c_emb", cfg.rate_config.embedding->c_emb}};
    doc["rate_config"] = rc;
    doc["seed"] = cfg.seed;
    doc["out"] = cfg.out_dir;
    doc["threads"] = cfg.threads;
    doc["n_test"] = cfg.n_test;
    doc["bracket_c"] = cfg.bracket_c;
    doc["b"] = cfg.geq_b;
    doc["alpha"] = cfg.smooth_alpha;
    doc["s"] = cfg.smooth_s;
    doc["alignment"] = cfg.conj_alignment;
    doc["a_star"] = cfg.conj_a_star;
    doc["activation"] = cfg.conj_activation;
    doc["m"] = cfg.conj_width;
    doc["n2"] = cfg.conj_n2;
    if (cfg.spectrum) doc["spectrum"] = cfg.spectrum->to_json();
    doc["sigma_xi"] = cfg.rate_sigma_xi;
    doc["N"] = cfg.rate_N;
    doc["lambda"] = cfg.rate_lambda;
    if (cfg.rate_k) doc["k"] = *cfg.rate_k;
    return doc;
}

} // namespace krr
