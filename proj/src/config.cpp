#include "tracesum/config.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include "tracesum/errors.hpp"

namespace tracesum
{

namespace
{

class Collector
{
public:
  void add(const std::string &key, const std::string &message) { errors_.push_back(key + ": " + message); }
  bool empty() const { return errors_.empty(); }

  std::string joined() const
  {
    std::string out;
    for (const auto &e : errors_)
    {
      out += (out.empty() ? "" : "; ") + e;
    }
    return out;
  }

private:
  std::vector<std::string> errors_;
};

std::string where(const YAML::Node &node)
{
  const auto m = node.Mark();
  if (m.line < 0)
  {
    return "";
  }
  return " (line " + std::to_string(m.line + 1) + ", column " + std::to_string(m.column + 1) + ")";
}

void check_keys(const YAML::Node &node, const std::string &prefix, const std::set<std::string> &allowed,
                Collector &errors)
{
  if (!node.IsMap())
  {
    errors.add(prefix.empty() ? "config" : prefix, "expected a mapping" + where(node));
    return;
  }
  for (const auto &kv : node)
  {
    const auto key = kv.first.as<std::string>();
    if (!allowed.count(key))
    {
      errors.add(prefix.empty() ? key : prefix + "." + key, "unknown key" + where(kv.first));
    }
  }
}

template <typename T>
void read(const YAML::Node &parent, const char *key, const std::string &prefix, T &out, Collector &errors)
{
  const auto node = parent[key];
  if (!node)
  {
    return;
  }
  const std::string name = prefix.empty() ? key : prefix + "." + key;
  try
  {
    out = node.as<T>();
  }
  catch (const YAML::Exception &)
  {
    errors.add(name, "wrong type" + where(node));
  }
}

template <typename T>
void read_list(const YAML::Node &parent, const char *key, const std::string &prefix, std::vector<T> &out,
               Collector &errors)
{
  const auto node = parent[key];
  if (!node)
  {
    return;
  }
  const std::string name = prefix.empty() ? key : prefix + "." + key;
  try
  {
    if (node.IsScalar())
    {
      out = {node.as<T>()};
    }
    else
    {
      out = node.as<std::vector<T>>();
    }
  }
  catch (const YAML::Exception &)
  {
    errors.add(name, "wrong type" + where(node));
  }
}

std::string resolve(const std::string &base, const std::string &path)
{
  std::filesystem::path p(path);
  if (p.is_absolute() || base.empty())
  {
    return p.string();
  }
  return (std::filesystem::path(base) / p).string();
}

void check_matrix_file(const ProblemConfig &c, const std::string &file, const char *key, Collector &errors)
{
  if (file.empty())
  {
    return;
  }
  const std::string name = std::string("extension.") + key;
  RMatrix m;
  try
  {
    m = read_matrix_csv(resolve(c.base_dir, file));
  }
  catch (const Error &e)
  {
    errors.add(name, e.what());
    return;
  }
  const int dim = c.trace_dim();
  if (m.rows() != dim || m.cols() != dim)
  {
    errors.add(name, "matrix is " + std::to_string(m.rows()) + "x" + std::to_string(m.cols()) +
                       ", expected m x m with m = " + std::to_string(dim));
  }
}

void validate(const ProblemConfig &c, Collector &errors)
{
  const auto &g = c.geometry;
  if (c.is_line())
  {
    if (g.points.empty())
    {
      errors.add("geometry.points", "at least one point is required");
    }
    for (std::size_t i = 1; i < g.points.size(); i++)
    {
      if (!(g.points[i] > g.points[i - 1]))
      {
        errors.add("geometry.points", "points must be strictly increasing");
        break;
      }
    }
    if (g.wall && !g.points.empty() && !(*g.wall > g.points.back()))
    {
      errors.add("geometry.wall", "wall must lie right of the last point");
    }
    if (!(c.base_point > 0.0))
    {
      errors.add("base_point", "must be positive when half-lines are present");
    }
  }
  else
  {
    if (g.cutoff < 1)
    {
      errors.add("geometry.cutoff", "mode cutoff must be at least 1");
    }
    if (c.base_point != 0.0 && c.model == ModelKind::Grushin)
    {
      errors.add("base_point", "Grushin Grams are only available at base point 0");
    }
    if (c.model == ModelKind::CylinderFlat && !(c.base_point > -1.0))
    {
      errors.add("base_point", "must exceed -1 for flat modes");
    }
  }
  if (c.model == ModelKind::Grushin && !(g.alpha > 0.0 && g.alpha < 1.0))
  {
    errors.add("geometry.alpha", "alpha out of (0,1)");
  }
  const auto &e = c.extension;
  static const std::set<std::string> presets{"delta", "delta_prime", "robin", "decoupled", "explicit"};
  if (!presets.count(e.preset))
  {
    errors.add("extension.preset", "unknown preset '" + e.preset + "'");
  }
  else if (e.preset == "delta" || e.preset == "delta_prime")
  {
    if (!c.is_line())
    {
      errors.add("extension.preset", e.preset + " needs a line model");
    }
    else if (e.strengths.size() != g.points.size())
    {
      errors.add("extension.strengths", std::to_string(e.strengths.size()) + " strengths for " +
                                          std::to_string(g.points.size()) + " points");
    }
  }
  else if (e.preset == "robin")
  {
    const std::size_t modes = c.is_modes() ? c.mode_indices().size() : 0;
    if (c.model != ModelKind::CylinderFlat)
    {
      errors.add("extension.preset", "robin needs the cylinder_flat model");
    }
    else if (e.theta.size() != 1 && e.theta.size() != modes)
    {
      errors.add("extension.theta", std::to_string(e.theta.size()) + " values for " + std::to_string(modes) +
                                      " modes (give one value or one per mode)");
    }
  }
  else if (e.preset == "explicit")
  {
    if (e.pi_file.empty())
    {
      errors.add("extension.pi_file", "required by the explicit preset");
    }
    check_matrix_file(c, e.pi_file, "pi_file", errors);
    check_matrix_file(c, e.theta_file, "theta_file", errors);
  }
  const auto &s = c.search;
  if (!(s.z_min < s.z_max))
  {
    errors.add("search", "z_min must be below z_max");
  }
  for (auto [name, v] : {std::pair{"search.root_tol", s.root_tol}, {"search.residual_tol", s.residual_tol},
                         {"search.null_tol", s.null_tol}, {"search.compare_tol", s.compare_tol}})
  {
    if (!(v > 0.0))
    {
      errors.add(name, "tolerance must be positive");
    }
  }
  if (s.scan_points < 2)
  {
    errors.add("search.scan_points", "must be at least 2");
  }
  if (!(c.oracle.margin > 0.0))
  {
    errors.add("oracle.margin", "must be positive");
  }
  if (c.oracle.h < 0.0 || c.oracle.fd_tol < 0.0)
  {
    errors.add("oracle", "h and fd_tol must be positive");
  }
  if (c.oracle.scan_points < 2)
  {
    errors.add("oracle.scan_points", "must be at least 2");
  }
  if (c.output.format != "json" && c.output.format != "csv")
  {
    errors.add("output.format", "must be csv or json");
  }
  const auto &q = c.quadrature;
  if (q.name != "gauss-legendre")
  {
    errors.add("quadrature.name", "only gauss-legendre is available");
  }
  if (q.order < 2 || q.tail_order < 2)
  {
    errors.add("quadrature", "orders must be at least 2");
  }
  if (!(q.tolerance > 0.0) || !(q.panel_width > 0.0) || !(q.growth >= 1.0) || !(q.cutoff > 0.0) ||
      !(q.tail_rate > 0.0))
  {
    errors.add("quadrature", "panel_width, cutoff, tail_rate and tolerance must be positive, growth >= 1");
  }
}

std::string number(double v)
{
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

std::string to_string(ModelKind kind)
{
  switch (kind)
  {
    case ModelKind::DeltaLine:
      return "delta_line";
    case ModelKind::DeltaPrimeLine:
      return "delta_prime_line";
    case ModelKind::CylinderFlat:
      return "cylinder_flat";
    case ModelKind::Grushin:
      return "grushin";
  }
  return "?";
}

std::vector<int> ProblemConfig::mode_indices() const
{
  std::vector<int> out;
  if (geometry.symmetric_modes)
  {
    for (int k = -geometry.cutoff; k <= -1; k++)
    {
      out.push_back(k);
    }
  }
  for (int k = 1; k <= geometry.cutoff; k++)
  {
    out.push_back(k);
  }
  return out;
}

int ProblemConfig::trace_dim() const
{
  if (is_line())
  {
    const int n = static_cast<int>(geometry.points.size());
    return n == 0 ? 0 : 2 * n + (geometry.wall ? 1 : 0);
  }
  return static_cast<int>(mode_indices().size());
}

double ProblemConfig::oracle_h() const
{
  return oracle.h > 0.0 ? oracle.h : (is_line() ? 1e-3 : 1e-4);
}

double ProblemConfig::oracle_fd_tol() const
{
  return oracle.fd_tol > 0.0 ? oracle.fd_tol : (is_line() ? 1e-4 : 1e-6);
}

ProblemConfig parse_config(const std::string &text, const std::string &base_dir)
{
  YAML::Node root;
  try
  {
    root = YAML::Load(text);
  }
  catch (const YAML::ParserException &e)
  {
    throw Error(ErrorCode::ParseError, "line " + std::to_string(e.mark.line + 1) + ", column " +
                                         std::to_string(e.mark.column + 1) + ": " + e.msg);
  }
  Collector errors;
  ProblemConfig c;
  c.base_dir = base_dir;
  if (!root.IsMap())
  {
    throw Error(ErrorCode::ValidationError, "config: expected a mapping at the top level");
  }
  check_keys(root, "",
             {"model", "geometry", "base_point", "metric", "representation", "extension", "search", "oracle",
              "output", "quadrature", "seed"},
             errors);

  std::string model;
  read(root, "model", "", model, errors);
  if (model == "delta_line")
    c.model = ModelKind::DeltaLine;
  else if (model == "delta_prime_line")
    c.model = ModelKind::DeltaPrimeLine;
  else if (model == "cylinder_flat")
    c.model = ModelKind::CylinderFlat;
  else if (model == "grushin")
    c.model = ModelKind::Grushin;
  else
    errors.add("model", model.empty() ? "required" : "unknown model '" + model + "'");

  if (const auto g = root["geometry"])
  {
    check_keys(g, "geometry", {"points", "wall", "cutoff", "modes", "alpha"}, errors);
    if (g.IsMap())
    {
      read_list(g, "points", "geometry", c.geometry.points, errors);
      if (g["wall"])
      {
        double w = 0.0;
        read(g, "wall", "geometry", w, errors);
        c.geometry.wall = w;
      }
      read(g, "cutoff", "geometry", c.geometry.cutoff, errors);
      read(g, "alpha", "geometry", c.geometry.alpha, errors);
      std::string modes = "symmetric";
      read(g, "modes", "geometry", modes, errors);
      if (modes != "symmetric" && modes != "positive")
      {
        errors.add("geometry.modes", "must be symmetric or positive");
      }
      c.geometry.symmetric_modes = modes == "symmetric";
    }
  }
  else
  {
    errors.add("geometry", "required");
  }

  c.base_point = c.is_line() ? 1.0 : 0.0;
  read(root, "base_point", "", c.base_point, errors);

  std::string metric = "exact";
  read(root, "metric", "", metric, errors);
  if (metric == "simplified")
    c.metric = MetricChoice::Simplified;
  else if (metric != "exact")
    errors.add("metric", "must be exact or simplified");

  std::string rep = "renormed";
  read(root, "representation", "", rep, errors);
  if (rep == "regularized")
    c.representation = Representation::Regularized;
  else if (rep != "renormed")
    errors.add("representation", "must be renormed or regularized");

  c.extension.preset = "decoupled";
  if (const auto e = root["extension"])
  {
    check_keys(e, "extension", {"preset", "strengths", "theta", "pi_file", "theta_file"}, errors);
    if (e.IsMap())
    {
      read(e, "preset", "extension", c.extension.preset, errors);
      read_list(e, "strengths", "extension", c.extension.strengths, errors);
      read_list(e, "theta", "extension", c.extension.theta, errors);
      read(e, "pi_file", "extension", c.extension.pi_file, errors);
      read(e, "theta_file", "extension", c.extension.theta_file, errors);
    }
  }

  if (const auto s = root["search"])
  {
    check_keys(s, "search",
               {"z_min", "z_max", "root_tol", "residual_tol", "null_tol", "compare_tol", "scan_points", "weyl_z"},
               errors);
    if (s.IsMap())
    {
      read(s, "z_min", "search", c.search.z_min, errors);
      read(s, "z_max", "search", c.search.z_max, errors);
      read(s, "root_tol", "search", c.search.root_tol, errors);
      read(s, "residual_tol", "search", c.search.residual_tol, errors);
      read(s, "null_tol", "search", c.search.null_tol, errors);
      read(s, "compare_tol", "search", c.search.compare_tol, errors);
      read(s, "scan_points", "search", c.search.scan_points, errors);
      read_list(s, "weyl_z", "search", c.search.weyl_z, errors);
    }
  }

  if (const auto o = root["oracle"])
  {
    check_keys(o, "oracle", {"margin", "h", "fd_tol", "scan_points"}, errors);
    if (o.IsMap())
    {
      read(o, "margin", "oracle", c.oracle.margin, errors);
      read(o, "h", "oracle", c.oracle.h, errors);
      read(o, "fd_tol", "oracle", c.oracle.fd_tol, errors);
      read(o, "scan_points", "oracle", c.oracle.scan_points, errors);
    }
  }

  if (const auto o = root["output"])
  {
    check_keys(o, "output", {"format", "path"}, errors);
    if (o.IsMap())
    {
      read(o, "format", "output", c.output.format, errors);
      read(o, "path", "output", c.output.path, errors);
    }
  }

  if (const auto q = root["quadrature"])
  {
    check_keys(q, "quadrature",
               {"name", "order", "tolerance", "panel_width", "growth", "cutoff", "tail_order", "tail_rate"}, errors);
    if (q.IsMap())
    {
      read(q, "name", "quadrature", c.quadrature.name, errors);
      read(q, "order", "quadrature", c.quadrature.order, errors);
      read(q, "tolerance", "quadrature", c.quadrature.tolerance, errors);
      read(q, "panel_width", "quadrature", c.quadrature.panel_width, errors);
      read(q, "growth", "quadrature", c.quadrature.growth, errors);
      read(q, "cutoff", "quadrature", c.quadrature.cutoff, errors);
      read(q, "tail_order", "quadrature", c.quadrature.tail_order, errors);
      read(q, "tail_rate", "quadrature", c.quadrature.tail_rate, errors);
    }
  }

  read(root, "seed", "", c.seed, errors);

  validate(c, errors);
  if (!errors.empty())
  {
    throw Error(ErrorCode::ValidationError, errors.joined());
  }
  return c;
}

ProblemConfig load_config(const std::string &path)
{
  std::ifstream in(path);
  if (!in)
  {
    throw Error(ErrorCode::ParseError, "cannot open config '" + path + "'");
  }
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), std::filesystem::path(path).parent_path().string());
}

std::string serialize_config(const ProblemConfig &c)
{
  YAML::Emitter out;
  auto num = [&](double v) { out << YAML::Value << number(v); };
  auto list = [&](const std::vector<double> &v) {
    out << YAML::Value << YAML::Flow << YAML::BeginSeq;
    for (double x : v)
    {
      out << number(x);
    }
    out << YAML::EndSeq;
  };
  out << YAML::BeginMap;
  out << YAML::Key << "model" << YAML::Value << to_string(c.model);
  out << YAML::Key << "geometry" << YAML::Value << YAML::BeginMap;
  if (c.is_line())
  {
    out << YAML::Key << "points";
    list(c.geometry.points);
    if (c.geometry.wall)
    {
      out << YAML::Key << "wall";
      num(*c.geometry.wall);
    }
  }
  else
  {
    out << YAML::Key << "cutoff" << YAML::Value << c.geometry.cutoff;
    out << YAML::Key << "modes" << YAML::Value << (c.geometry.symmetric_modes ? "symmetric" : "positive");
    if (c.model == ModelKind::Grushin)
    {
      out << YAML::Key << "alpha";
      num(c.geometry.alpha);
    }
  }
  out << YAML::EndMap;
  out << YAML::Key << "base_point";
  num(c.base_point);
  out << YAML::Key << "metric" << YAML::Value << (c.metric == MetricChoice::Exact ? "exact" : "simplified");
  out << YAML::Key << "representation" << YAML::Value << to_string(c.representation);
  out << YAML::Key << "extension" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "preset" << YAML::Value << c.extension.preset;
  if (!c.extension.strengths.empty())
  {
    out << YAML::Key << "strengths";
    list(c.extension.strengths);
  }
  if (!c.extension.theta.empty())
  {
    out << YAML::Key << "theta";
    list(c.extension.theta);
  }
  if (!c.extension.pi_file.empty())
  {
    out << YAML::Key << "pi_file" << YAML::Value << c.extension.pi_file;
  }
  if (!c.extension.theta_file.empty())
  {
    out << YAML::Key << "theta_file" << YAML::Value << c.extension.theta_file;
  }
  out << YAML::EndMap;
  const auto &s = c.search;
  out << YAML::Key << "search" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "z_min";
  num(s.z_min);
  out << YAML::Key << "z_max";
  num(s.z_max);
  out << YAML::Key << "root_tol";
  num(s.root_tol);
  out << YAML::Key << "residual_tol";
  num(s.residual_tol);
  out << YAML::Key << "null_tol";
  num(s.null_tol);
  out << YAML::Key << "compare_tol";
  num(s.compare_tol);
  out << YAML::Key << "scan_points" << YAML::Value << s.scan_points;
  out << YAML::Key << "weyl_z";
  list(s.weyl_z);
  out << YAML::EndMap;
  out << YAML::Key << "oracle" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "margin";
  num(c.oracle.margin);
  out << YAML::Key << "h";
  num(c.oracle_h());
  out << YAML::Key << "fd_tol";
  num(c.oracle_fd_tol());
  out << YAML::Key << "scan_points" << YAML::Value << c.oracle.scan_points;
  out << YAML::EndMap;
  out << YAML::Key << "output" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "format" << YAML::Value << c.output.format;
  if (!c.output.path.empty())
  {
    out << YAML::Key << "path" << YAML::Value << c.output.path;
  }
  out << YAML::EndMap;
  const auto &q = c.quadrature;
  out << YAML::Key << "quadrature" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "name" << YAML::Value << q.name;
  out << YAML::Key << "order" << YAML::Value << q.order;
  out << YAML::Key << "tolerance";
  num(q.tolerance);
  out << YAML::Key << "panel_width";
  num(q.panel_width);
  out << YAML::Key << "growth";
  num(q.growth);
  out << YAML::Key << "cutoff";
  num(q.cutoff);
  out << YAML::Key << "tail_order" << YAML::Value << q.tail_order;
  out << YAML::Key << "tail_rate";
  num(q.tail_rate);
  out << YAML::EndMap;
  out << YAML::Key << "seed" << YAML::Value << c.seed;
  out << YAML::EndMap;
  return std::string(out.c_str()) + "\n";
}

RMatrix read_matrix_csv(const std::string &path)
{
  std::ifstream in(path);
  if (!in)
  {
    throw Error(ErrorCode::ParseError, "cannot open matrix file '" + path + "'");
  }
  std::vector<std::vector<double>> rows;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line))
  {
    lineno++;
    if (line.find_first_not_of(" \t\r") == std::string::npos || line[0] == '#')
    {
      continue;
    }
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ','))
    {
      try
      {
        std::size_t used = 0;
        row.push_back(std::stod(cell, &used));
        if (cell.find_first_not_of(" \t\r", used) != std::string::npos)
        {
          throw std::invalid_argument(cell);
        }
      }
      catch (const std::exception &)
      {
        throw Error(ErrorCode::ParseError, path + ": line " + std::to_string(lineno) + ": bad number '" + cell + "'");
      }
    }
    if (!rows.empty() && row.size() != rows.front().size())
    {
      throw Error(ErrorCode::ParseError, path + ": line " + std::to_string(lineno) + ": ragged row");
    }
    rows.push_back(std::move(row));
  }
  RMatrix m(rows.size(), rows.empty() ? 0 : rows.front().size());
  for (std::size_t i = 0; i < rows.size(); i++)
  {
    for (std::size_t j = 0; j < rows[i].size(); j++)
    {
      m(i, j) = rows[i][j];
    }
  }
  return m;
}

std::vector<BlockSpec> build_specs(const ProblemConfig &c)
{
  std::vector<BlockSpec> specs;
  if (c.is_line())
  {
    specs = line_blocks(c.geometry.points, c.geometry.wall);
  }
  else
  {
    for (int k : c.mode_indices())
    {
      specs.push_back(c.model == ModelKind::CylinderFlat ? BlockSpec::flat_mode(k)
                                                         : BlockSpec::grushin_mode(k, c.geometry.alpha));
    }
  }
  for (auto &s : specs)
  {
    s.quadrature = c.quadrature;
  }
  return specs;
}

DirectSumProblem build_problem(const ProblemConfig &c)
{
  AssembleOptions opts;
  opts.metric = c.metric;
  if (c.is_modes())
  {
    opts.block_indices = c.mode_indices();
  }
  return assemble_problem(build_specs(c), c.base_point, opts);
}

ExtensionParams build_params(const ProblemConfig &c, const DirectSumProblem &problem)
{
  const auto &e = c.extension;
  const auto rep = c.representation;
  if (e.preset == "decoupled")
  {
    return decoupled_params(problem, rep);
  }
  if (e.preset == "delta")
  {
    return delta_params(problem, e.strengths, rep);
  }
  if (e.preset == "delta_prime")
  {
    return delta_prime_params(problem, e.strengths, rep);
  }
  if (e.preset == "robin")
  {
    std::vector<double> theta = e.theta;
    if (theta.size() == 1)
    {
      theta.assign(problem.truncation_size(), e.theta.front());
    }
    return robin_mode_params(problem, theta, rep);
  }
  const int m = problem.total_dim();
  const CMatrix pi = read_matrix_csv(resolve(c.base_dir, e.pi_file)).cast<Complex>();
  const CMatrix theta =
    e.theta_file.empty() ? CMatrix(CMatrix::Zero(m, m)) : CMatrix(read_matrix_csv(resolve(c.base_dir, e.theta_file)).cast<Complex>());
  return make_params(problem, rep, pi, theta);
}

OracleModel build_oracle_model(const ProblemConfig &c)
{
  if (!c.is_line())
  {
    throw Error(ErrorCode::ModelMismatch, "line oracles need a line model");
  }
  OracleModel m;
  m.wall = c.geometry.wall;
  const auto &e = c.extension;
  for (std::size_t i = 0; i < c.geometry.points.size(); i++)
  {
    PointCoupling pc;
    if (e.preset == "delta")
    {
      pc = {CouplingKind::Delta, e.strengths[i]};
    }
    else if (e.preset == "delta_prime")
    {
      pc = {CouplingKind::DeltaPrime, e.strengths[i]};
    }
    else
    {
      throw Error(ErrorCode::ModelMismatch, "oracles need the delta or delta_prime preset");
    }
    m.points.push_back({c.geometry.points[i], pc});
  }
  m.validate();
  return m;
}

SearchOptions search_options(const ProblemConfig &c)
{
  SearchOptions o;
  o.z_min = c.search.z_min;
  o.z_max = c.search.z_max;
  o.root_tol = c.search.root_tol;
  o.residual_tol = c.search.residual_tol;
  o.null_tol = c.search.null_tol;
  return o;
}

}  // namespace tracesum
