#pragma once

#include "acss/crt.hpp"

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace acss {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class Experiment { BehrensFisher, CiTest, SigmaSweep, ValiditySuite };

std::string to_string(Experiment e);
Experiment parse_experiment(const std::string& s);

struct BehrensFisherParams {
    Index n0 = 50, n1 = 50;
    double mu0 = 0.0;
    double gamma0 = 1.0, gamma1 = 2.0;  // variances
    Index m = 5;                        // contaminated leading points of group 0: 3 + |t_1|
    Index h = 45;
    double sigma_mle = 4.0;
    double sigma_mtle = 4.0;
    std::string statistic = "diff";     // diff: mean1 - mean0 (upper tail); absdiff: |mean1 - mean0|
    bool hessian_det = true;
};

struct CiTestParams {
    Index n = 50, d = 200;
    double nu = 1.0;
    double theta_value = 1.5;
    Index theta_k = 5;
    double xi_value = 0.2;
    Index xi_k = 5;
    Index m_unlabeled = 0;
    double sigma = 0.7;
    std::map<std::string, double> sigma_by_method;
    std::map<std::string, double> lambda_by_method;  // penalty level on the (1/2n) loss scale
    double xi_lambda = 0.3;
    bool xi_refit = true;
    double debiased_lambda = 0.3;
    double node_lambda = 0.3;
    Index group_size = 5;
    Index sparsity = 5;
};

struct ExperimentConfig {
    Experiment experiment = Experiment::BehrensFisher;
    int replications = 500;
    std::uint64_t master_seed = 20240601;
    double alpha = 0.1;
    std::vector<double> grid;          // mu1, beta, or sigma depending on the experiment
    std::vector<std::string> methods;
    int M = 500;
    BehrensFisherParams bf;
    CiTestParams ci;
    std::string suite = "exchangeability";
    std::string out;
    std::string format = "csv";
    int threads = 1;

    void validate() const;
};

// Default settings for each experiment (grid and methods filled in).
ExperimentConfig default_config(Experiment e);
// JSON object; unknown keys and type mismatches raise ConfigError.
ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config(const std::string& path);

struct ExperimentRow {
    std::string experiment;
    std::string method;
    double grid = 0.0;
    int rep = 0;
    std::uint64_t seed = 0;
    double pval = 1.0;
    bool reject = false;
    std::string error;  // empty on success
    double ms = 0.0;

    bool operator==(const ExperimentRow&) const = default;
};

// grid x methods x replications, rows sorted by (method order, grid index, rep).
std::vector<ExperimentRow> run_experiment(const ExperimentConfig& cfg, int threads = 1);

// One replication's p-value; exposed so a single row can be recomputed in isolation.
ExperimentRow run_row(const ExperimentConfig& cfg, std::size_t method_idx, std::size_t grid_idx, int rep);
std::uint64_t row_seed(const ExperimentConfig& cfg, const std::string& method, std::size_t grid_idx, int rep);

struct SummaryRow {
    std::string method;
    double grid = 0.0;
    int reps = 0;
    int errors = 0;
    double rate = 0.0;
    double se = 0.0;
};

// Rejection rate and binomial SE per (method, grid), in order of first appearance.
std::vector<SummaryRow> summarize(const std::vector<ExperimentRow>& rows, double alpha);
const SummaryRow* find_summary(const std::vector<SummaryRow>& table, const std::string& method, double grid);

enum class OutputFormat { Csv, Json, SvgLines };
OutputFormat parse_format(const std::string& s);

void write_csv(std::ostream& os, const std::vector<ExperimentRow>& rows);
std::vector<ExperimentRow> read_csv(std::istream& is);
void write_json(std::ostream& os, const std::vector<ExperimentRow>& rows, const std::vector<SummaryRow>& table);
void write_svg(std::ostream& os, const std::vector<SummaryRow>& table, double alpha, const std::string& title = "");
// Writes to `path` ("-" = stdout); I/O failures raise std::runtime_error naming the path.
void emit(const std::vector<ExperimentRow>& rows, double alpha, OutputFormat fmt, const std::string& path);

// ---- validity suites ----

struct ValidityCheck {
    std::string name;
    double alpha = 0.0;
    double rate = 0.0;
    double se = 0.0;
    bool pass = false;
};

std::vector<std::string> validity_suites();
// Methods run by a suite; ConfigError for an unknown suite.
std::vector<std::string> validity_suite_methods(const std::string& suite);
// P(pval <= alpha) <= alpha + 2 SE at alpha in {0.05, 0.1, 0.2}, per method of the suite.
std::vector<ValidityCheck> check_validity(const std::vector<ExperimentRow>& rows);

}  // namespace acss
