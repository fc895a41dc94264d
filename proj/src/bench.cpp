#include "acss/bench.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace acss {

using nlohmann::json;

std::string to_string(Experiment e) {
    switch (e) {
    case Experiment::BehrensFisher: return "behrens-fisher";
    case Experiment::CiTest: return "ci-test";
    case Experiment::SigmaSweep: return "sigma-sweep";
    case Experiment::ValiditySuite: return "validity-suite";
    }
    return "?";
}

Experiment parse_experiment(const std::string& s) {
    for (auto e : {Experiment::BehrensFisher, Experiment::CiTest, Experiment::SigmaSweep, Experiment::ValiditySuite})
        if (to_string(e) == s) return e;
    throw ConfigError("unknown experiment '" + s + "'");
}

std::vector<std::string> validity_suites() { return {"exchangeability", "resampling-free"}; }

std::vector<std::string> validity_suite_methods(const std::string& suite) {
    if (suite == "exchangeability") return {"unweighted", "weighted"};
    if (suite == "resampling-free") return {"exact-crt", "css", "exact-crt-resampled"};
    throw ConfigError("unknown validity suite '" + suite + "'");
}

namespace {


std::vector<double> steps(double lo, double hi, double step) {
    std::vector<double> v;
    for (int k = 0; lo + k * step <= hi + 1e-9; ++k) v.push_back(std::round((lo + k * step) * 1e9) / 1e9);
    return v;
}

}  // namespace

ExperimentConfig default_config(Experiment e) {
    ExperimentConfig c;
    c.experiment = e;
    switch (e) {
    case Experiment::BehrensFisher:
        c.grid = steps(0.0, 1.0, 0.1);
        c.methods = {"acss-mle", "acss-mtle", "t-test", "oracle-t-test"};
        break;
    case Experiment::CiTest:
        c.grid = steps(0.0, 1.0, 0.2);
        c.methods = {"oracle-crt", "acss-lasso", "acss-scad", "acss-mcp", "acss-group-scad", "acss-iht",
                     "debiased-lasso-baseline"};
        break;
    case Experiment::SigmaSweep:
        c.grid = {0.2, 0.5, 0.7, 1.0, 1.5};
        c.methods = {"acss-lasso", "acss-mcp", "acss-iht"};
        break;
    case Experiment::ValiditySuite:
        c.grid = {0.0};
        c.methods = validity_suite_methods(c.suite);
        c.M = 199;
        break;
    }
    return c;
}

void ExperimentConfig::validate() const {
    if (replications < 0) throw ConfigError("replications must be >= 0");
    if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("alpha must lie in (0, 1)");
    if (grid.empty()) throw ConfigError("grid must be nonempty");
    if (methods.empty()) throw ConfigError("methods must be nonempty");
    if (M < 1) throw ConfigError("M must be >= 1");
    if (threads < 1) throw ConfigError("threads must be >= 1");
    std::set<std::string> seen;
    for (const auto& m : methods)
        if (!seen.insert(m).second) throw ConfigError("duplicate method '" + m + "'");
    switch (experiment) {
    case Experiment::BehrensFisher: {
        static const std::set<std::string> ok = {"acss-mle", "acss-mtle", "t-test", "oracle-t-test"};
        for (const auto& m : methods)
            if (!ok.count(m)) throw ConfigError("behrens-fisher: unknown method '" + m + "'");
        if (bf.n0 < 3 || bf.n1 < 3) throw ConfigError("behrens-fisher: group sizes must be >= 3");
        if (bf.m < 0 || bf.m > bf.n0 - 2) throw ConfigError("behrens-fisher: m out of range");
        if (bf.h < 3 || bf.h > bf.n0) throw ConfigError("behrens-fisher: h must lie in [3, n0]");
        if (!(bf.gamma0 > 0 && bf.gamma1 > 0)) throw ConfigError("behrens-fisher: variances must be positive");
        if (!(bf.sigma_mle > 0 && bf.sigma_mtle > 0)) throw ConfigError("behrens-fisher: sigma must be positive");
        if (bf.statistic != "diff" && bf.statistic != "absdiff")
            throw ConfigError("behrens-fisher: statistic must be diff or absdiff");
        break;
    }
    case Experiment::CiTest:
    case Experiment::SigmaSweep: {
        static const std::set<std::string> ok = {"oracle-crt", "exact-crt", "css", "acss-ols", "acss-lasso", "acss-scad", "acss-mcp",
                                                 "acss-group-scad", "acss-iht", "debiased-lasso-baseline"};
        for (const auto& m : methods)
            if (!ok.count(m)) throw ConfigError(to_string(experiment) + ": unknown method '" + m + "'");
        if (ci.n < 2 || ci.d < 1) throw ConfigError("ci-test: n >= 2 and d >= 1 required");
        if (ci.m_unlabeled < 0) throw ConfigError("ci-test: m must be >= 0");
        if (!(ci.nu > 0) || !(ci.sigma > 0)) throw ConfigError("ci-test: nu and sigma must be positive");
        if (ci.sparsity < 1 || ci.sparsity > std::min(ci.n, ci.d)) throw ConfigError("ci-test: sparsity out of range");
        if (ci.group_size < 1) throw ConfigError("ci-test: group_size must be >= 1");
        if (experiment == Experiment::SigmaSweep)
            for (double s : grid)
                if (!(s > 0)) throw ConfigError("sigma-sweep: grid values must be positive");
        break;
    }
    case Experiment::ValiditySuite: {
        const auto ok = validity_suite_methods(suite);
        for (const auto& m : methods)
            if (std::find(ok.begin(), ok.end(), m) == ok.end())
                throw ConfigError("validity-suite: unknown method '" + m + "' for suite " + suite);
        break;
    }
    }
}

namespace {

template <class T>
T get(const json& j, const char* key, const std::string& where) {
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(where + "." + key + ": " + e.what());
    }
}

void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
    if (!j.is_object()) throw ConfigError(where + ": expected an object");
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!allowed.count(it.key())) throw ConfigError(where + ": unknown key '" + it.key() + "'");
}

}  // namespace

ExperimentConfig parse_config(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: invalid JSON: ") + e.what());
    }
    check_keys(j, {"experiment", "replications", "master_seed", "alpha", "grid", "methods", "M", "behrens_fisher",
                   "ci_test", "suite", "output"},
               "config");
    if (!j.contains("experiment")) throw ConfigError("config: 'experiment' is required");
    ExperimentConfig c = default_config(parse_experiment(get<std::string>(j, "experiment", "config")));
    if (j.contains("suite")) {
        c.suite = get<std::string>(j, "suite", "config");
        if (c.experiment == Experiment::ValiditySuite) c.methods = validity_suite_methods(c.suite);
    }
    if (j.contains("replications")) c.replications = get<int>(j, "replications", "config");
    if (j.contains("master_seed")) c.master_seed = get<std::uint64_t>(j, "master_seed", "config");
    if (j.contains("alpha")) c.alpha = get<double>(j, "alpha", "config");
    if (j.contains("grid")) c.grid = get<std::vector<double>>(j, "grid", "config");
    if (j.contains("M")) c.M = get<int>(j, "M", "config");
    if (j.contains("behrens_fisher")) {
        const json& b = j["behrens_fisher"];
        const std::string w = "behrens_fisher";
        check_keys(b, {"n0", "n1", "mu0", "gamma0", "gamma1", "m", "h", "sigma_mle", "sigma_mtle", "statistic",
                       "hessian_det"},
                   w);
        auto& p = c.bf;
        if (b.contains("n0")) p.n0 = get<Index>(b, "n0", w);
        if (b.contains("n1")) p.n1 = get<Index>(b, "n1", w);
        if (b.contains("mu0")) p.mu0 = get<double>(b, "mu0", w);
        if (b.contains("gamma0")) p.gamma0 = get<double>(b, "gamma0", w);
        if (b.contains("gamma1")) p.gamma1 = get<double>(b, "gamma1", w);
        if (b.contains("m")) p.m = get<Index>(b, "m", w);
        if (b.contains("h")) p.h = get<Index>(b, "h", w);
        if (b.contains("sigma_mle")) p.sigma_mle = get<double>(b, "sigma_mle", w);
        if (b.contains("sigma_mtle")) p.sigma_mtle = get<double>(b, "sigma_mtle", w);
        if (b.contains("statistic")) p.statistic = get<std::string>(b, "statistic", w);
        if (b.contains("hessian_det")) p.hessian_det = get<bool>(b, "hessian_det", w);
    }
    if (j.contains("ci_test")) {
        const json& t = j["ci_test"];
        const std::string w = "ci_test";
        check_keys(t, {"n", "d", "nu", "theta_value", "theta_k", "xi_value", "xi_k", "m", "sigma", "sigma_by_method",
                       "lambda_by_method", "xi_lambda", "xi_refit", "debiased_lambda", "node_lambda", "group_size",
                       "sparsity"},
                   w);
        auto& p = c.ci;
        if (t.contains("n")) p.n = get<Index>(t, "n", w);
        if (t.contains("d")) p.d = get<Index>(t, "d", w);
        if (t.contains("nu")) p.nu = get<double>(t, "nu", w);
        if (t.contains("theta_value")) p.theta_value = get<double>(t, "theta_value", w);
        if (t.contains("theta_k")) p.theta_k = get<Index>(t, "theta_k", w);
        if (t.contains("xi_value")) p.xi_value = get<double>(t, "xi_value", w);
        if (t.contains("xi_k")) p.xi_k = get<Index>(t, "xi_k", w);
        if (t.contains("m")) p.m_unlabeled = get<Index>(t, "m", w);
        if (t.contains("sigma")) p.sigma = get<double>(t, "sigma", w);
        if (t.contains("sigma_by_method")) p.sigma_by_method = get<std::map<std::string, double>>(t, "sigma_by_method", w);
        if (t.contains("lambda_by_method"))
            for (const auto& [k, v] : get<std::map<std::string, double>>(t, "lambda_by_method", w)) p.lambda_by_method[k] = v;
        if (t.contains("xi_lambda")) p.xi_lambda = get<double>(t, "xi_lambda", w);
        if (t.contains("xi_refit")) p.xi_refit = get<bool>(t, "xi_refit", w);
        if (t.contains("debiased_lambda")) p.debiased_lambda = get<double>(t, "debiased_lambda", w);
        if (t.contains("node_lambda")) p.node_lambda = get<double>(t, "node_lambda", w);
        if (t.contains("group_size")) p.group_size = get<Index>(t, "group_size", w);
        if (t.contains("sparsity")) p.sparsity = get<Index>(t, "sparsity", w);
    }
    if (j.contains("methods")) c.methods = get<std::vector<std::string>>(j, "methods", "config");
    else if (c.experiment == Experiment::CiTest && c.ci.m_unlabeled > 0 && c.ci.n + c.ci.m_unlabeled > c.ci.d)
        c.methods.insert(c.methods.begin() + 1, "css");
    if (j.contains("output")) {
        const json& o = j["output"];
        check_keys(o, {"path", "format"}, "output");
        if (o.contains("path")) c.out = get<std::string>(o, "path", "output");
        if (o.contains("format")) {
            c.format = get<std::string>(o, "format", "output");
            parse_format(c.format);
        }
    }
    c.validate();
    return c;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

std::vector<SummaryRow> summarize(const std::vector<ExperimentRow>& rows, double /*alpha*/) {
    std::vector<SummaryRow> out;
    std::map<std::pair<std::string, double>, std::size_t> at;
    for (const auto& r : rows) {
        auto key = std::make_pair(r.method, r.grid);
        auto it = at.find(key);
        if (it == at.end()) {
            it = at.emplace(key, out.size()).first;
            out.push_back(SummaryRow{r.method, r.grid, 0, 0, 0.0, 0.0});
        }
        auto& s = out[it->second];
        ++s.reps;
        if (!r.error.empty()) ++s.errors;
        s.rate += r.reject ? 1.0 : 0.0;
    }
    for (auto& s : out) {
        s.rate /= s.reps;
        s.se = std::sqrt(s.rate * (1.0 - s.rate) / s.reps);
    }
    return out;
}

const SummaryRow* find_summary(const std::vector<SummaryRow>& table, const std::string& method, double grid) {
    for (const auto& s : table)
        if (s.method == method && std::abs(s.grid - grid) < 1e-9) return &s;
    return nullptr;
}

std::vector<ValidityCheck> check_validity(const std::vector<ExperimentRow>& rows) {
    std::vector<ValidityCheck> out;
    std::vector<std::string> methods;
    for (const auto& r : rows)
        if (std::find(methods.begin(), methods.end(), r.method) == methods.end()) methods.push_back(r.method);
    for (const auto& m : methods) {
        for (double a : {0.05, 0.1, 0.2}) {
            int R = 0, hit = 0;
            bool err = false;
            for (const auto& r : rows) {
                if (r.method != m) continue;
                ++R;
                hit += r.pval <= a;
                err = err || !r.error.empty();
            }
            ValidityCheck c;
            c.name = m;
            c.alpha = a;
            c.rate = R ? static_cast<double>(hit) / R : 0.0;
            c.se = R ? std::sqrt(a * (1.0 - a) / R) : 0.0;
            c.pass = R > 0 && !err && c.rate <= a + 2.0 * c.se;
            out.push_back(c);
        }
    }
    return out;
}

}  // namespace acss
