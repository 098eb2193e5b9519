#include "ivy/io.hpp"

#include <json.hpp>

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace ivy {

namespace {

using nlohmann::json;

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kParseError, "cannot open for writing: " + path);
  return out;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kParseError, "cannot open: " + path);
  return in;
}

[[noreturn]] void parse_fail(const std::string& path, long line, long col,
                             const std::string& what) {
  std::ostringstream msg;
  msg << path << ":" << line << ":" << col << ": " << what;
  throw Error(ErrorCode::kParseError, msg.str());
}

json vector_to_json(const Eigen::VectorXd& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

Eigen::VectorXd vector_from_json(const json& a) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(a.size()));
  for (std::size_t i = 0; i < a.size(); ++i) v[static_cast<Eigen::Index>(i)] = a[i].get<double>();
  return v;
}

json matrix_to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd matrix_from_json(const json& rows) {
  const auto r = static_cast<Eigen::Index>(rows.size());
  const auto c = r > 0 ? static_cast<Eigen::Index>(rows[0].size()) : 0;
  Eigen::MatrixXd m(r, c);
  for (Eigen::Index i = 0; i < r; ++i)
    for (Eigen::Index j = 0; j < c; ++j)
      m(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)].get<double>();
  return m;
}

json edges_to_json(const std::vector<std::pair<int, int>>& edges) {
  json a = json::array();
  for (const auto& [i, j] : edges) a.push_back(json::array({i, j}));
  return a;
}

std::vector<std::pair<int, int>> edges_from_json(const json& a) {
  std::vector<std::pair<int, int>> edges;
  for (const auto& e : a) edges.emplace_back(e[0].get<int>(), e[1].get<int>());
  return edges;
}

// +inf thresholds (no-edge rule) serialize as null.
json finite_or_null(double v) {
  if (std::isinf(v)) return nullptr;
  return v;
}

double finite_or_inf(const json& v) {
  if (v.is_null()) return std::numeric_limits<double>::infinity();
  return v.get<double>();
}

}  // namespace

void write_dataset_csv(const std::string& path, const Dataset& data, bool zero_one) {
  auto out = open_out(path);
  out << "y,x";
  for (Eigen::Index j = 0; j < data.m(); ++j) {
    if (j < static_cast<Eigen::Index>(data.candidate_names.size()))
      out << ',' << data.candidate_names[static_cast<std::size_t>(j)];
    else
      out << ",w" << (j + 1);
  }
  out << '\n';
  auto encode = [zero_one](std::int8_t v) { return zero_one ? (v + 1) / 2 : static_cast<int>(v); };
  for (Eigen::Index i = 0; i < data.n(); ++i) {
    out << encode(data.y[i]) << ',' << encode(data.x[i]);
    for (Eigen::Index j = 0; j < data.m(); ++j) out << ',' << encode(data.W(i, j));
    out << '\n';
  }
}

Dataset read_dataset_csv(const std::string& path, bool zero_one) {
  auto in = open_in(path);
  std::string line;
  if (!std::getline(in, line)) parse_fail(path, 1, 1, "empty file");

  std::vector<std::string> header;
  {
    std::stringstream ss(line);
    std::string tok;
    while (std::getline(ss, tok, ',')) header.push_back(tok);
  }
  if (header.size() < 3 || header[0] != "y" || header[1] != "x")
    parse_fail(path, 1, 1, "expected header y,x,w1,...");
  const auto m = static_cast<Eigen::Index>(header.size() - 2);

  std::vector<std::array<std::int8_t, 2>> yx;
  std::vector<std::int8_t> wdata;
  long line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const char* p = line.data();
    const char* end = p + line.size();
    std::array<std::int8_t, 2> row_yx{};
    for (Eigen::Index col = 0; col < m + 2; ++col) {
      int value = 0;
      const auto [next, ec] = std::from_chars(p, end, value);
      if (ec != std::errc())
        parse_fail(path, line_no, static_cast<long>(p - line.data()) + 1, "expected integer");
      if (zero_one) {
        if (value != 0 && value != 1)
          parse_fail(path, line_no, static_cast<long>(p - line.data()) + 1,
                     "expected 0/1 value");
        value = 2 * value - 1;
      } else if (value != 1 && value != -1) {
        parse_fail(path, line_no, static_cast<long>(p - line.data()) + 1,
                   "expected -1/+1 value");
      }
      if (col == 0)
        row_yx[0] = static_cast<std::int8_t>(value);
      else if (col == 1)
        row_yx[1] = static_cast<std::int8_t>(value);
      else
        wdata.push_back(static_cast<std::int8_t>(value));
      p = next;
      if (col < m + 1) {
        if (p == end || *p != ',')
          parse_fail(path, line_no, static_cast<long>(p - line.data()) + 1, "expected comma");
        ++p;
      }
    }
    if (p != end)
      parse_fail(path, line_no, static_cast<long>(p - line.data()) + 1, "trailing characters");
    yx.push_back(row_yx);
  }
  if (yx.empty()) parse_fail(path, line_no, 1, "no data rows");

  Dataset data;
  const auto n = static_cast<Eigen::Index>(yx.size());
  data.y.resize(n);
  data.x.resize(n);
  data.W.resize(n, m);
  for (Eigen::Index i = 0; i < n; ++i) {
    data.y[i] = yx[static_cast<std::size_t>(i)][0];
    data.x[i] = yx[static_cast<std::size_t>(i)][1];
    for (Eigen::Index j = 0; j < m; ++j)
      data.W(i, j) = wdata[static_cast<std::size_t>(i * m + j)];
  }
  data.candidate_names.assign(header.begin() + 2, header.end());
  return data;
}

void write_spec_json(const std::string& path, const SyntheticSpec& spec) {
  json j;
  j["prior_z"] = spec.prior_z;
  j["c_given_z_pos"] = spec.c_given_z_pos;
  j["c_given_z_neg"] = spec.c_given_z_neg;
  json groups = json::array();
  for (const auto& g : spec.valid_groups) {
    json gj;
    if (g.dependent) {
      gj["z_coupling"] = vector_to_json(g.z_coupling);
      gj["pair_coupling"] = matrix_to_json(g.pair_coupling);
    } else {
      gj["accuracies"] = g.accuracies;
    }
    groups.push_back(std::move(gj));
  }
  j["valid_groups"] = std::move(groups);
  j["invalid_accuracies"] = spec.invalid_accuracies;
  j["noise_count"] = spec.noise_count;
  j["x_table"] = spec.x_table;
  j["y_table"] = spec.y_table;
  open_out(path) << j.dump(2) << '\n';
}

SyntheticSpec read_spec_json(const std::string& path) {
  json j;
  try {
    open_in(path) >> j;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParseError, path + ": " + e.what());
  }
  SyntheticSpec spec;
  try {
    spec.prior_z = j.value("prior_z", spec.prior_z);
    if (j.contains("prior_c")) {
      spec.c_given_z_pos = spec.c_given_z_neg = j["prior_c"].get<double>();
    }
    spec.c_given_z_pos = j.value("c_given_z_pos", spec.c_given_z_pos);
    spec.c_given_z_neg = j.value("c_given_z_neg", spec.c_given_z_neg);
    for (const auto& gj : j.value("valid_groups", json::array())) {
      if (gj.contains("accuracies")) {
        spec.valid_groups.push_back(
            CliqueGroup::independent(gj["accuracies"].get<std::vector<double>>()));
      } else {
        spec.valid_groups.push_back(CliqueGroup::clique(
            vector_from_json(gj.at("z_coupling")), matrix_from_json(gj.at("pair_coupling"))));
      }
    }
    if (j.contains("invalid_accuracies"))
      spec.invalid_accuracies = j["invalid_accuracies"].get<std::vector<double>>();
    spec.noise_count = j.value("noise_count", 0);
    if (j.contains("x_table")) spec.x_table = j["x_table"].get<std::array<double, 4>>();
    if (j.contains("y_table")) spec.y_table = j["y_table"].get<std::array<double, 4>>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParseError, path + ": " + e.what());
  }
  spec.check();
  return spec;
}

void write_matrix_csv(const std::string& path, const Eigen::MatrixXd& matrix) {
  auto out = open_out(path);
  out.precision(17);
  for (Eigen::Index i = 0; i < matrix.rows(); ++i) {
    for (Eigen::Index j = 0; j < matrix.cols(); ++j) {
      if (j) out << ',';
      out << matrix(i, j);
    }
    out << '\n';
  }
}

void write_truth_csv(const std::string& path, const SampleResult& sample) {
  auto out = open_out(path);
  out << "z,c,valid_mask\n";
  std::string mask;
  for (bool b : sample.valid) mask.push_back(b ? '1' : '0');
  for (Eigen::Index i = 0; i < sample.z.size(); ++i) {
    out << static_cast<int>(sample.z[i]) << ',' << static_cast<int>(sample.c[i]) << ',';
    if (i == 0) out << mask;
    out << '\n';
  }
}

void write_model_json(const std::string& path, const FittedModel& fitted) {
  json j;
  j["version"] = 1;
  j["valid"] = fitted.graph.valid;
  j["edges"] = edges_to_json(fitted.graph.edges);
  j["cliques"] = fitted.graph.cliques;
  j["mu"] = vector_to_json(fitted.model.mu);
  j["second_moment"] = matrix_to_json(fitted.model.second_moment);
  j["prior_z"] = fitted.model.prior_z;
  j["sign_violations"] = fitted.model.sign_violations;
  j["hyperparams"] = {{"lambda", fitted.hyper.lambda},
                      {"gamma", fitted.hyper.gamma},
                      {"t1", fitted.hyper.t1},
                      {"t2", finite_or_null(fitted.hyper.t2)}};
  j["selection_qualified"] = fitted.selection_qualified;
  json cliques = json::array();
  for (const auto& c : fitted.model.clique_params) {
    json cj;
    cj["members"] = c.members;
    cj["edges"] = edges_to_json(c.edges);
    cj["theta_z"] = c.theta_z;
    cj["theta_unary"] = vector_to_json(c.theta_unary);
    cj["theta_coupling"] = vector_to_json(c.theta_coupling);
    cj["theta_pair"] = vector_to_json(c.theta_pair);
    cj["table_pos"] = vector_to_json(c.table_pos);
    cj["table_neg"] = vector_to_json(c.table_neg);
    cliques.push_back(std::move(cj));
  }
  j["clique_params"] = std::move(cliques);
  j["diagnostics"] = fitted.diagnostics;
  open_out(path) << j.dump(2) << '\n';
}

FittedModel read_model_json(const std::string& path) {
  json j;
  try {
    open_in(path) >> j;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParseError, path + ": " + e.what());
  }
  FittedModel fitted;
  fitted.graph = CandidateGraph::from_edges(j.at("valid").get<std::vector<int>>(),
                                            edges_from_json(j.at("edges")));
  fitted.model.valid = fitted.graph.valid;
  fitted.model.mu = vector_from_json(j.at("mu"));
  fitted.model.second_moment = matrix_from_json(j.at("second_moment"));
  fitted.model.prior_z = j.at("prior_z").get<double>();
  fitted.model.sign_violations = j.value("sign_violations", 0);
  const auto& h = j.at("hyperparams");
  fitted.hyper.lambda = h.at("lambda").get<double>();
  fitted.hyper.gamma = h.at("gamma").get<double>();
  fitted.hyper.t1 = h.at("t1").get<double>();
  fitted.hyper.t2 = finite_or_inf(h.at("t2"));
  fitted.selection_qualified = j.value("selection_qualified", true);
  for (const auto& cj : j.value("clique_params", json::array())) {
    CliqueConditional c;
    c.members = cj.at("members").get<std::vector<int>>();
    c.edges = edges_from_json(cj.at("edges"));
    c.theta_z = cj.at("theta_z").get<double>();
    c.theta_unary = vector_from_json(cj.at("theta_unary"));
    c.theta_coupling = vector_from_json(cj.at("theta_coupling"));
    c.theta_pair = vector_from_json(cj.at("theta_pair"));
    c.table_pos = vector_from_json(cj.at("table_pos"));
    c.table_neg = vector_from_json(cj.at("table_neg"));
    fitted.model.clique_params.push_back(std::move(c));
  }
  fitted.diagnostics = j.value("diagnostics", Diagnostics{});
  fitted.model.diagnostics = fitted.diagnostics;
  return fitted;
}

void write_reports_json(const std::string& path, const std::vector<EffectReport>& reports,
                        const Diagnostics& diagnostics) {
  json j;
  j["version"] = 1;
  json rs = json::array();
  for (const auto& r : reports) {
    json rj;
    rj["method"] = r.method;
    rj["median"] = r.median;
    rj["ci_low"] = r.ci_low;
    rj["ci_high"] = r.ci_high;
    rj["n_used"] = r.n_used;
    rj["replicates"] = r.replicates;
    rj["diagnostics"] = r.diagnostics;
    rs.push_back(std::move(rj));
  }
  j["reports"] = std::move(rs);
  j["diagnostics"] = diagnostics;
  open_out(path) << j.dump(2) << '\n';
}

RunConfig read_config_json(const std::string& path) {
  json j;
  try {
    open_in(path) >> j;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParseError, path + ": " + e.what());
  }
  RunConfig c;
  try {
    c.seed = j.value("seed", c.seed);
    c.replicates = j.value("replicates", c.replicates);
    c.prior_z = j.value("prior_z", c.prior_z);
    c.xi = j.value("xi", c.xi);
    c.n = j.value("n", c.n);
    c.preset_name = j.value("preset", c.preset_name);
    c.spec_path = j.value("spec", c.spec_path);
    c.dump_prefix = j.value("dump_decomposition", c.dump_prefix);
    c.input = j.value("input", c.input);
    c.model_path = j.value("model", c.model_path);
    c.out = j.value("out", c.out);
    c.truth_out = j.value("truth_out", c.truth_out);
    if (j.contains("methods")) c.methods = j["methods"].get<std::vector<std::string>>();
    c.zero_one = j.value("zero_one_encoding", c.zero_one);
    c.reuse_structure = j.value("reuse_structure", c.reuse_structure);
    c.unbiased_moment = j.value("unbiased_moment", c.unbiased_moment);
    if (j.contains("lambda")) c.lambda = j["lambda"].get<double>();
    if (j.contains("gamma")) c.gamma = j["gamma"].get<double>();
    if (j.contains("t1")) c.t1 = j["t1"].get<double>();
    if (j.contains("t2")) c.t2 = finite_or_inf(j["t2"]);
    if (j.contains("lambda_grid")) c.lambda_grid = j["lambda_grid"].get<std::vector<double>>();
    if (j.contains("gamma_grid")) c.gamma_grid = j["gamma_grid"].get<std::vector<double>>();
    c.eval_kind = j.value("eval", c.eval_kind);
    c.datasets = j.value("datasets", c.datasets);
    c.seeds = j.value("seeds", c.seeds);
    if (j.contains("n_list")) c.n_list = j["n_list"].get<std::vector<long>>();
    if (j.contains("accuracies")) c.accuracies = j["accuracies"].get<std::vector<double>>();
    c.power_n = j.value("power_n", c.power_n);
    c.power_p1 = j.value("power_p1", c.power_p1);
    c.power_alpha = j.value("power_alpha", c.power_alpha);
    c.power_beta = j.value("power_beta", c.power_beta);
    c.power_level = j.value("power_level", c.power_level);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParseError, path + ": " + e.what());
  }
  return c;
}

}  // namespace ivy
