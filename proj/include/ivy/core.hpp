// Shared domain types: datasets of {-1,+1} variables, candidate graphs,
// fitted models, and effect reports. All types are immutable value types
// once constructed.
#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace ivy {

using BinVector = Eigen::Matrix<std::int8_t, Eigen::Dynamic, 1>;
using BinMatrix = Eigen::Matrix<std::int8_t, Eigen::Dynamic, Eigen::Dynamic>;

enum class ErrorCode {
  // validation
  kNonBinaryValue,
  kShapeMismatch,
  kTooManyVariables,
  kCliqueTooLarge,
  kUnknownPreset,
  kParseError,
  kUnknownCommand,
  kInvalidArgument,
  // numerical
  kNonFiniteObjective,
  kTooFewValid,
  kRankDeficient,
  kInfeasibleMoments,
  kConstantCovariate,
  kWeakDenominator,
  kAllReplicatesFailed,
  kSingleClass,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

// Validation failures exit with 2, numerical failures with 3.
inline bool is_validation_error(ErrorCode code) {
  switch (code) {
    case ErrorCode::kNonBinaryValue:
    case ErrorCode::kShapeMismatch:
    case ErrorCode::kTooManyVariables:
    case ErrorCode::kCliqueTooLarge:
    case ErrorCode::kUnknownPreset:
    case ErrorCode::kParseError:
    case ErrorCode::kUnknownCommand:
    case ErrorCode::kInvalidArgument:
      return true;
    default:
      return false;
  }
}

// Warnings accumulated along a pipeline run; echoed into output files.
using Diagnostics = std::vector<std::string>;

struct Dataset {
  BinVector y;  // outcome, length n
  BinVector x;  // risk factor, length n
  BinMatrix W;  // n x m candidate matrix
  std::vector<std::string> candidate_names;

  Eigen::Index n() const { return W.rows(); }
  Eigen::Index m() const { return W.cols(); }
};

// Estimated valid set and dependency structure. `cliques` is always the
// connected-component partition of (valid, edges).
struct CandidateGraph {
  std::vector<int> valid;                     // sorted candidate indices
  std::vector<std::pair<int, int>> edges;     // i < j, both in valid
  std::vector<std::vector<int>> cliques;      // each sorted; ordered by first member

  // Builds the graph and derives cliques; throws on inconsistent input.
  static CandidateGraph from_edges(std::vector<int> valid,
                                   std::vector<std::pair<int, int>> edges);
};

// Canonical Ising parameters and conditional tables for one clique of
// candidates attached to the latent z. Tables are indexed lexicographically:
// state bit k set <=> members[k] == +1.
struct CliqueConditional {
  std::vector<int> members;                 // global candidate indices, sorted
  std::vector<std::pair<int, int>> edges;   // within-clique, global indices
  double theta_z = 0.0;
  Eigen::VectorXd theta_unary;              // per member, on w_j
  Eigen::VectorXd theta_coupling;           // per member, on w_j z
  Eigen::VectorXd theta_pair;               // per edge, on w_i w_j
  Eigen::VectorXd table_pos;                // P(w_C | z = +1), size 2^|C|
  Eigen::VectorXd table_neg;                // P(w_C | z = -1)

  int size() const { return static_cast<int>(members.size()); }
};

// Mean parameters of the candidate model over the estimated valid set.
struct Model {
  std::vector<int> valid;                   // mirrors the graph's valid set
  Eigen::VectorXd mu;                       // estimated E[w_j z], |mu_j| <= 1 - eps_clip
  Eigen::MatrixXd second_moment;            // |V| x |V|, unit diagonal
  double prior_z = 0.5;                     // P(z = 1), configured
  std::vector<CliqueConditional> clique_params;  // empty until fitted
  int sign_violations = 0;
  Diagnostics diagnostics;
};

struct EffectReport {
  std::string method;                       // ivy | uas | was | association
  double median = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  std::vector<double> replicates;           // non-missing, replicate order
  long n_used = 0;
  Diagnostics diagnostics;
};

// Linear-interpolation empirical quantile on a sorted vector.
double quantile_sorted(const std::vector<double>& sorted, double q);

// Builds a report with median and 2.5/97.5 percentiles from the replicates.
EffectReport make_report(std::string method, std::vector<double> replicates, long n_used,
                         Diagnostics diagnostics);

// Throws unless every entry of y, x, W is exactly -1 or +1 and shapes agree.
void validate(const Dataset& dataset);

struct OrientResult {
  Dataset data;
  std::vector<bool> flipped;  // per candidate
};

// Negates each candidate column whose sample correlation with x is negative;
// zero-correlation columns keep their original sign.
OrientResult orient_candidates(const Dataset& dataset);

}  // namespace ivy
