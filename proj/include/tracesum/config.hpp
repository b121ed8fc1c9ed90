#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "tracesum/krein.hpp"
#include "tracesum/oracle.hpp"

namespace tracesum
{

enum class ModelKind
{
  DeltaLine,
  DeltaPrimeLine,
  CylinderFlat,
  Grushin,
};

std::string to_string(ModelKind kind);

struct GeometryConfig
{
  std::vector<double> points;
  std::optional<double> wall;
  int cutoff = 0;              // modes k = +-1..+-cutoff
  bool symmetric_modes = true; // false: k = 1..cutoff only
  double alpha = 0.0;
};

struct ExtensionConfig
{
  std::string preset;  // delta | delta_prime | robin | decoupled | explicit
  std::vector<double> strengths;
  std::vector<double> theta;
  std::string pi_file;
  std::string theta_file;
};

struct SearchConfig
{
  double z_min = 1e-6;
  double z_max = 100.0;
  double root_tol = 1e-13;
  double residual_tol = 1e-9;
  double null_tol = 1e-9;
  double compare_tol = 1e-7;
  int scan_points = 200;
  std::vector<double> weyl_z{0.5, 1.0, 2.0};
};

struct OracleConfig
{
  double margin = 20.0;
  double h = 0.0;       // 0: 1e-3 for line models, 1e-4 for modes
  double fd_tol = 0.0;  // 0: 1e-4 for line models, 1e-6 for modes
  int scan_points = 4000;
};

struct OutputConfig
{
  std::string format = "json";
  std::string path;
};

struct ProblemConfig
{
  ModelKind model = ModelKind::DeltaLine;
  GeometryConfig geometry;
  double base_point = 0.0;
  MetricChoice metric = MetricChoice::Exact;
  Representation representation = Representation::Renormed;
  ExtensionConfig extension;
  SearchConfig search;
  OracleConfig oracle;
  OutputConfig output;
  QuadratureRule quadrature;
  std::uint64_t seed = 1;
  std::string base_dir;  // resolves relative matrix paths

  bool is_line() const { return model == ModelKind::DeltaLine || model == ModelKind::DeltaPrimeLine; }
  bool is_modes() const { return !is_line(); }
  std::vector<int> mode_indices() const;
  // Trace dimension m implied by the geometry.
  int trace_dim() const;
  double oracle_h() const;
  double oracle_fd_tol() const;
};

// Parses and validates. Syntax errors throw ParseError with line:column;
// semantic problems are collected and thrown together as ValidationError.
ProblemConfig parse_config(const std::string &text, const std::string &base_dir = ".");
ProblemConfig load_config(const std::string &path);

// Normalized YAML with every default spelled out.
std::string serialize_config(const ProblemConfig &config);

// Real matrix from a CSV file (comma-separated rows).
RMatrix read_matrix_csv(const std::string &path);

std::vector<BlockSpec> build_specs(const ProblemConfig &config);
DirectSumProblem build_problem(const ProblemConfig &config);
ExtensionParams build_params(const ProblemConfig &config, const DirectSumProblem &problem);
OracleModel build_oracle_model(const ProblemConfig &config);
SearchOptions search_options(const ProblemConfig &config);

}  // namespace tracesum
