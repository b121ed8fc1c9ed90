#include "tracesum/cli.hpp"

#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "tracesum/errors.hpp"
#include "tracesum/parallel.hpp"
#include "format.hpp"

namespace tracesum
{

namespace
{

using Json = nlohmann::ordered_json;

bool csv(const ProblemConfig &c) { return c.output.format == "csv"; }

Json matrix_json(const CMatrix &m)
{
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); i++)
  {
    Json row = Json::array();
    for (Eigen::Index j = 0; j < m.cols(); j++)
    {
      row.push_back(m(i, j).real());
    }
    rows.push_back(row);
  }
  return rows;
}

std::string complex_text(Complex z) { return format_double(z.real()) + "," + format_double(z.imag()); }

// Gaussian bump with seeded centre, width and complex amplitude inside a block.
ScalarFn random_bump(const BlockOperator &b, std::mt19937_64 &rng)
{
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double centre;
  switch (b.kind())
  {
    case BlockKind::LeftHalfLine:
      centre = b.upper() - 0.5 - 1.5 * u(rng);
      break;
    case BlockKind::Interval:
      centre = b.lower() + (0.25 + 0.5 * u(rng)) * (b.upper() - b.lower());
      break;
    default:
      centre = b.lower() + 0.5 + 1.5 * u(rng);
      break;
  }
  double width = 0.4 + 0.6 * u(rng);
  if (b.kind() == BlockKind::Interval)
  {
    width = std::min(width, 0.3 * (b.upper() - b.lower()));
  }
  const Complex amp(u(rng) - 0.5, u(rng) - 0.5);
  return [=](double x) { return amp * std::exp(-(x - centre) * (x - centre) / (width * width)); };
}

std::vector<double> probe_points(const BlockOperator &b)
{
  switch (b.kind())
  {
    case BlockKind::LeftHalfLine:
      return {b.upper() - 2.0, b.upper() - 0.7, b.upper() - 0.1};
    case BlockKind::Interval:
    {
      const double a = b.lower(), d = b.upper() - b.lower();
      return {a + 0.2 * d, a + 0.5 * d, a + 0.85 * d};
    }
    default:
      return {b.lower() + 0.1, b.lower() + 0.7, b.lower() + 2.0};
  }
}

int cmd_gram(const ProblemConfig &c, std::ostream &out)
{
  const auto problem = build_problem(c);
  if (csv(c))
  {
    out << "block_index,row,col,value\n";
    for (std::size_t i = 0; i < problem.truncation_size(); i++)
    {
      const CMatrix &g = problem.gram(i);
      for (Eigen::Index r = 0; r < g.rows(); r++)
      {
        for (Eigen::Index s = 0; s < g.cols(); s++)
        {
          out << problem.block_index(i) << "," << r << "," << s << "," << format_double(g(r, s).real()) << "\n";
        }
      }
    }
    return kExitPass;
  }
  Json j;
  j["base_point"] = problem.base_point();
  j["blocks"] = Json::array();
  for (std::size_t i = 0; i < problem.truncation_size(); i++)
  {
    j["blocks"].push_back({{"block_index", problem.block_index(i)},
                           {"kind", to_string(problem.block(i).kind())},
                           {"gram", matrix_json(problem.gram(i))}});
  }
  out << j.dump(2) << "\n";
  return kExitPass;
}

int cmd_weights(const ProblemConfig &c, std::ostream &out)
{
  const auto problem = build_problem(c);
  const auto reg = regularized_rep(problem);
  if (csv(c))
  {
    write_weights_csv(out, problem.space(), &reg.r_factors);
    return kExitPass;
  }
  Json j;
  j["metric"] = c.metric == MetricChoice::Exact ? "exact" : "simplified";
  j["components"] = Json::array();
  for (std::size_t i = 0; i < problem.truncation_size(); i++)
  {
    j["components"].push_back({{"block_index", problem.block_index(i)},
                               {"metric", matrix_json(problem.space().components()[i].metric)},
                               {"r", matrix_json(reg.r_factors[i])}});
  }
  out << j.dump(2) << "\n";
  return kExitPass;
}

int cmd_fit_exponent(const ProblemConfig &c, std::ostream &out)
{
  if (!c.is_modes())
  {
    throw Error(ErrorCode::ModelMismatch, "fit-exponent needs a mode family");
  }
  const auto problem = build_problem(c);
  const int kmax = c.geometry.cutoff;
  const auto gap = naive_range_gap(problem, 1, kmax);
  const double expected = c.model == ModelKind::Grushin ? (1.0 - c.geometry.alpha) / (1.0 + c.geometry.alpha) : 1.0;
  const auto &f = gap.growth;
  if (csv(c))
  {
    out << "slope,intercept,residual,points,expected_slope,sup_inverse_gram,naive_target_not_surjective\n";
    out << format_double(f.slope) << "," << format_double(f.intercept) << "," << format_double(f.residual) << ","
        << f.points << "," << format_double(expected) << "," << format_double(gap.sup_inverse_gram) << ","
        << (gap.naive_target_not_surjective ? "true" : "false") << "\n";
    return kExitPass;
  }
  Json j;
  j["slope"] = f.slope;
  j["intercept"] = f.intercept;
  j["residual"] = f.residual;
  j["points"] = f.points;
  j["expected_slope"] = expected;
  j["trace_smoothness"] = 0.5 * f.slope;
  j["sup_inverse_gram"] = gap.sup_inverse_gram;
  j["naive_target_not_surjective"] = gap.naive_target_not_surjective;
  out << j.dump(2) << "\n";
  return kExitPass;
}

int cmd_weyl(const ProblemConfig &c, std::ostream &out)
{
  const auto problem = build_problem(c);
  const double lambda = problem.base_point();
  if (csv(c))
  {
    out << "z,block_index,row,col,re,im\n";
  }
  Json j;
  j["base_point"] = lambda;
  j["values"] = Json::array();
  for (double z : c.search.weyl_z)
  {
    for (std::size_t i = 0; i < problem.truncation_size(); i++)
    {
      const CMatrix w = problem.block(i).weyl_block(z, lambda);
      if (csv(c))
      {
        for (Eigen::Index r = 0; r < w.rows(); r++)
        {
          for (Eigen::Index s = 0; s < w.cols(); s++)
          {
            out << format_double(z) << "," << problem.block_index(i) << "," << r << "," << s << ","
                << complex_text(w(r, s)) << "\n";
          }
        }
      }
      else
      {
        j["values"].push_back({{"z", z}, {"block_index", problem.block_index(i)}, {"weyl", matrix_json(w)}});
      }
    }
  }
  if (!csv(c))
  {
    out << j.dump(2) << "\n";
  }
  return kExitPass;
}

int cmd_secular_scan(const ProblemConfig &c, std::ostream &out)
{
  const auto problem = build_problem(c);
  const SecularSystem sys(problem, build_params(c, problem));
  const int n = c.search.scan_points;
  std::vector<double> zs(n), min_abs(n);
  std::vector<int> negative(n);
  parallel_for(static_cast<std::size_t>(n), [&](std::size_t i) {
    const double z = c.search.z_min + (c.search.z_max - c.search.z_min) * static_cast<double>(i) / (n - 1);
    zs[i] = z;
    const CMatrix m = sys.secular_matrix(z);
    if (m.size() == 0)
    {
      min_abs[i] = std::numeric_limits<double>::infinity();
      negative[i] = 0;
      return;
    }
    Eigen::SelfAdjointEigenSolver<CMatrix> eig(0.5 * (m + m.adjoint()), Eigen::EigenvaluesOnly);
    min_abs[i] = eig.eigenvalues().cwiseAbs().minCoeff();
    negative[i] = static_cast<int>((eig.eigenvalues().array() < 0.0).count());
  });
  if (csv(c))
  {
    out << "z,min_abs_eigenvalue,negative_count\n";
    for (int i = 0; i < n; i++)
    {
      out << format_double(zs[i]) << "," << format_double(min_abs[i]) << "," << negative[i] << "\n";
    }
    return kExitPass;
  }
  Json j;
  j["params_digest"] = sys.params_digest();
  j["samples"] = Json::array();
  for (int i = 0; i < n; i++)
  {
    j["samples"].push_back({{"z", zs[i]},
                            {"min_abs_eigenvalue", std::isfinite(min_abs[i]) ? Json(min_abs[i]) : Json(nullptr)},
                            {"negative_count", negative[i]}});
  }
  out << j.dump(2) << "\n";
  return kExitPass;
}

void write_report(const ProblemConfig &c, const SpectrumReport &rep, std::ostream &out)
{
  if (csv(c))
  {
    out << "z,E,residual,bracket_lo,bracket_hi,multiplicity\n";
    for (const auto &r : rep.roots)
    {
      out << format_double(r.z) << "," << format_double(r.energy) << "," << format_double(r.residual) << ","
          << format_double(r.bracket_lo) << "," << format_double(r.bracket_hi) << "," << r.multiplicity << "\n";
    }
    return;
  }
  out << rep.to_json() << "\n";
}

int cmd_eigs(const ProblemConfig &c, std::ostream &out)
{
  const auto problem = build_problem(c);
  const SecularSystem sys(problem, build_params(c, problem));
  write_report(c, sys.find_eigenvalues(search_options(c)), out);
  return kExitPass;
}

struct CompareRow
{
  double krein = NAN, oracle = NAN, fd = NAN;
};

int cmd_oracle_compare(const ProblemConfig &c, std::ostream &out)
{
  const auto problem = build_problem(c);
  const SecularSystem sys(problem, build_params(c, problem));
  const auto krein = sys.find_eigenvalues(search_options(c));
  std::vector<double> oracle_e, fd_e;
  bool have_fd = true;
  std::string oracle_name;
  if (c.is_line())
  {
    const auto model = build_oracle_model(c);
    TransferOptions topts;
    topts.scan_points = c.oracle.scan_points;
    for (const auto &r : transfer_matrix_spectrum(model, -c.search.z_max, -c.search.z_min, topts).roots)
    {
      oracle_e.push_back(r.energy);
    }
    oracle_name = "transfer-matrix";
    bool all_delta = true;
    for (const auto &p : model.points)
    {
      all_delta = all_delta && (p.coupling.kind == CouplingKind::Delta || p.coupling.strength == 0.0);
    }
    if (all_delta)
    {
      for (double e : fd_spectrum(model, {c.oracle.margin, c.oracle_h()}, -c.search.z_min))
      {
        if (e >= -c.search.z_max)
        {
          fd_e.push_back(e);
        }
      }
    }
    else
    {
      have_fd = false;
    }
  }
  else
  {
    if (c.model != ModelKind::CylinderFlat || c.extension.preset != "robin")
    {
      throw Error(ErrorCode::ModelMismatch, "mode oracle needs cylinder_flat with the robin preset");
    }
    oracle_name = "mode-fd";
    have_fd = false;
    const auto params = build_params(c, problem);
    const auto idx = c.mode_indices();
    for (std::size_t i = 0; i < idx.size(); i++)
    {
      const double theta = params.representation == Representation::Renormed
                             ? params.theta(i, i).real()
                             : convert_params(problem, params, Representation::Renormed).theta(i, i).real();
      const double rho = robin_parameter(problem, i, theta);
      for (double e : mode_fd_spectrum(idx[i], rho, c.oracle.margin, c.oracle_h()))
      {
        // Energies of H = -A relative to the common threshold.
        if (-e >= c.search.z_min && -e <= c.search.z_max)
        {
          oracle_e.push_back(e);
        }
      }
    }
  }
  std::sort(oracle_e.begin(), oracle_e.end());
  std::sort(fd_e.begin(), fd_e.end());
  std::vector<double> krein_e;
  for (const auto &r : krein.roots)
  {
    for (int m = 0; m < r.multiplicity; m++)
    {
      krein_e.push_back(r.energy);
    }
  }
  std::sort(krein_e.begin(), krein_e.end());
  const std::size_t rows = std::max({krein_e.size(), oracle_e.size(), fd_e.size()});
  const double tol = c.is_line() ? c.search.compare_tol : c.oracle_fd_tol();
  double dev = 0.0, dev_fd = 0.0;
  bool pass = krein_e.size() == oracle_e.size() && (!have_fd || fd_e.size() == krein_e.size());
  std::vector<CompareRow> table(rows);
  for (std::size_t i = 0; i < rows; i++)
  {
    auto &row = table[i];
    row.krein = i < krein_e.size() ? krein_e[i] : NAN;
    row.oracle = i < oracle_e.size() ? oracle_e[i] : NAN;
    row.fd = i < fd_e.size() ? fd_e[i] : NAN;
    if (i < krein_e.size() && i < oracle_e.size())
    {
      dev = std::max(dev, std::abs(row.krein - row.oracle));
    }
    if (i < krein_e.size() && i < fd_e.size())
    {
      dev_fd = std::max(dev_fd, std::abs(row.krein - row.fd));
    }
  }
  pass = pass && dev <= tol && (!have_fd || dev_fd <= c.oracle_fd_tol());
  if (csv(c))
  {
    out << "index,krein_E," << oracle_name << "_E,abs_dev" << (have_fd ? ",fd_E,fd_abs_dev" : "") << "\n";
    for (std::size_t i = 0; i < rows; i++)
    {
      const auto &r = table[i];
      out << i << "," << format_double(r.krein) << "," << format_double(r.oracle) << ","
          << format_double(std::abs(r.krein - r.oracle));
      if (have_fd)
      {
        out << "," << format_double(r.fd) << "," << format_double(std::abs(r.krein - r.fd));
      }
      out << "\n";
    }
    out << "# max_abs_dev=" << format_double(dev) << " tolerance=" << format_double(tol);
    if (have_fd)
    {
      out << " fd_max_abs_dev=" << format_double(dev_fd) << " fd_tolerance=" << format_double(c.oracle_fd_tol());
    }
    out << " result=" << (pass ? "pass" : "fail") << "\n";
  }
  else
  {
    auto num = [](double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); };
    Json j;
    j["oracle"] = oracle_name;
    j["rows"] = Json::array();
    for (std::size_t i = 0; i < rows; i++)
    {
      Json row{{"krein_E", num(table[i].krein)}, {"oracle_E", num(table[i].oracle)}};
      if (have_fd)
      {
        row["fd_E"] = num(table[i].fd);
      }
      j["rows"].push_back(row);
    }
    j["max_abs_dev"] = dev;
    j["tolerance"] = tol;
    if (have_fd)
    {
      j["fd_max_abs_dev"] = dev_fd;
      j["fd_tolerance"] = c.oracle_fd_tol();
    }
    j["pass"] = pass;
    out << j.dump(2) << "\n";
  }
  return pass ? kExitPass : kExitNumeric;
}

int cmd_resolvent_check(const ProblemConfig &c, std::ostream &out)
{
  const auto problem = build_problem(c);
  const SecularSystem sys(problem, build_params(c, problem));
  const SecularSystem free_sys(problem, decoupled_params(problem, c.representation));
  std::mt19937_64 rng(c.seed);
  PiecewiseFn f, g;
  for (const auto &b : problem.blocks())
  {
    f.push_back(random_bump(b, rng));
  }
  for (const auto &b : problem.blocks())
  {
    g.push_back(random_bump(b, rng));
  }
  const Complex z(2.0, 1.0), w(1.0, -1.0);
  const auto rz = resolvent_apply(sys, z, f);
  const auto rw = resolvent_apply(sys, w, f);
  const auto rzrw = resolvent_apply(sys, z, rw);
  const auto decoupled = resolvent_apply(free_sys, z, f);
  const auto bare = free_resolvent_apply(problem, z, f);
  double identity = 0.0, pi_zero = 0.0;
  for (std::size_t i = 0; i < problem.truncation_size(); i++)
  {
    for (double x : probe_points(problem.block(i)))
    {
      identity = std::max(identity, std::abs(rz[i](x) - rw[i](x) - (w - z) * rzrw[i](x)));
      pi_zero = std::max(pi_zero, std::abs(decoupled[i](x) - bare[i](x)));
    }
  }
  const double zr = 2.5;
  const Complex lhs = l2_inner(problem, g, resolvent_apply(sys, zr, f));
  const Complex rhs = l2_inner(problem, resolvent_apply(sys, zr, g), f);
  const double symmetry = std::abs(lhs - rhs);
  const bool pass = identity < 1e-6 && symmetry < 1e-7 && pi_zero < 1e-12;
  if (csv(c))
  {
    out << "check,residual,tolerance\n";
    out << "resolvent_identity," << format_double(identity) << "," << format_double(1e-6) << "\n";
    out << "real_z_symmetry," << format_double(symmetry) << "," << format_double(1e-7) << "\n";
    out << "decoupled_equals_free," << format_double(pi_zero) << "," << format_double(1e-12) << "\n";
  }
  else
  {
    Json j;
    j["z"] = {z.real(), z.imag()};
    j["w"] = {w.real(), w.imag()};
    j["resolvent_identity"] = identity;
    j["real_z"] = zr;
    j["real_z_symmetry"] = symmetry;
    j["decoupled_equals_free"] = pi_zero;
    j["pass"] = pass;
    out << j.dump(2) << "\n";
  }
  return pass ? kExitPass : kExitNumeric;
}

int cmd_lift_check(const ProblemConfig &c, std::ostream &out)
{
  const auto problem = build_problem(c);
  std::mt19937_64 rng(c.seed);
  std::normal_distribution<double> normal;
  const int samples = 10;
  double round_trip = 0.0, isometry = 0.0;
  for (int s = 0; s < samples; s++)
  {
    CVector phi(problem.total_dim());
    for (Eigen::Index i = 0; i < phi.size(); i++)
    {
      phi(i) = Complex(normal(rng), normal(rng));
    }
    const auto v = lift(problem, phi);
    round_trip = std::max(round_trip, (numeric_trace(problem, v) - phi).cwiseAbs().maxCoeff() /
                                        std::max(1.0, phi.cwiseAbs().maxCoeff()));
    const double norm = problem.space().norm(phi);
    isometry = std::max(isometry, std::abs(graph_norm_fd(problem, v) - norm) / norm);
  }
  NormEstimateOptions nopts;
  nopts.seed = c.seed;
  // The norm estimate needs a finite-difference domain, which Grushin modes lack.
  const std::size_t probes =
    problem.blocks().front().kind() == BlockKind::GrushinMode ? 0 : std::min<std::size_t>(problem.truncation_size(), 4);
  std::vector<double> estimates(probes);
  parallel_for(probes, [&](std::size_t i) { estimates[i] = iota_tau_norm_estimate(problem, i, nopts).estimate; });
  bool pass = round_trip < 1e-7 && isometry < 1e-7;
  for (double e : estimates)
  {
    pass = pass && e >= 0.99 && e <= 1.001;
  }
  if (csv(c))
  {
    out << "check,value\n";
    out << "trace_round_trip," << format_double(round_trip) << "\n";
    out << "graph_norm_isometry," << format_double(isometry) << "\n";
    for (std::size_t i = 0; i < probes; i++)
    {
      out << "iota_tau_norm_block_" << problem.block_index(i) << "," << format_double(estimates[i]) << "\n";
    }
  }
  else
  {
    Json j;
    j["samples"] = samples;
    j["trace_round_trip"] = round_trip;
    j["graph_norm_isometry"] = isometry;
    j["iota_tau_norm"] = Json::array();
    for (std::size_t i = 0; i < probes; i++)
    {
      j["iota_tau_norm"].push_back({{"block_index", problem.block_index(i)}, {"estimate", estimates[i]}});
    }
    j["pass"] = pass;
    out << j.dump(2) << "\n";
  }
  return pass ? kExitPass : kExitNumeric;
}

}  // namespace

const std::vector<std::string> &cli_commands()
{
  static const std::vector<std::string> commands{"gram",          "weights", "fit-exponent",
                                                 "weyl",          "secular-scan", "eigs",
                                                 "oracle-compare", "resolvent-check", "lift-check"};
  return commands;
}

int exit_status(ErrorCode code)
{
  switch (code)
  {
    case ErrorCode::SpectrumHit:
    case ErrorCode::BasePointInSpectrum:
    case ErrorCode::SearchFailure:
    case ErrorCode::DegenerateNull:
    case ErrorCode::SecularSingular:
    case ErrorCode::NonPositiveMetric:
    case ErrorCode::InsufficientPoints:
    case ErrorCode::GridTooCoarse:
      return kExitNumeric;
    default:
      return kExitUsage;
  }
}

int run_command(const std::string &command, const ProblemConfig &config, std::ostream &out, std::ostream &)
{
  if (command == "gram")
    return cmd_gram(config, out);
  if (command == "weights")
    return cmd_weights(config, out);
  if (command == "fit-exponent")
    return cmd_fit_exponent(config, out);
  if (command == "weyl")
    return cmd_weyl(config, out);
  if (command == "secular-scan")
    return cmd_secular_scan(config, out);
  if (command == "eigs")
    return cmd_eigs(config, out);
  if (command == "oracle-compare")
    return cmd_oracle_compare(config, out);
  if (command == "resolvent-check")
    return cmd_resolvent_check(config, out);
  if (command == "lift-check")
    return cmd_lift_check(config, out);
  throw Error(ErrorCode::InvalidSpec, "unknown command '" + command + "'");
}

int run_cli(int argc, const char *const *argv, std::ostream &out, std::ostream &err)
{
  CLI::App app{"Trace maps, Krein extensions and point-interaction spectra"};
  app.name("tracesum");
  std::string command, config_path, out_path, format;
  std::optional<std::uint64_t> seed;
  int threads = 0;
  bool print_config = false;
  app.add_option("command", command, "Command to run")->required()->check(CLI::IsMember(cli_commands()));
  app.add_option("--config", config_path, "YAML problem config")->required();
  app.add_option("--out", out_path, "Output file (default: output.path, else stdout)");
  app.add_option("--format", format, "Output format")->check(CLI::IsMember({"csv", "json"}));
  app.add_option("--seed", seed, "Random seed for checks");
  app.add_option("--threads", threads, "Worker threads (default: hardware)")->check(CLI::NonNegativeNumber);
  app.add_flag("--print-config", print_config, "Print the normalized config to stderr");
  try
  {
    app.parse(argc, argv);
  }
  catch (const CLI::ParseError &e)
  {
    if (e.get_exit_code() == 0)
    {
      out << app.help();
      return kExitPass;
    }
    err << "tracesum: " << e.what() << "\n" << "run with --help for usage\n";
    return kExitUsage;
  }
  try
  {
    auto config = load_config(config_path);
    if (!format.empty())
    {
      config.output.format = format;
    }
    if (!out_path.empty())
    {
      config.output.path = out_path;
    }
    if (seed)
    {
      config.seed = *seed;
    }
    if (threads > 0)
    {
      set_default_threads(threads);
    }
    if (print_config)
    {
      err << serialize_config(config);
    }
    std::ostringstream buffer;
    const int status = run_command(command, config, buffer, err);
    if (config.output.path.empty())
    {
      out << buffer.str();
    }
    else
    {
      std::ofstream file(config.output.path);
      if (!file)
      {
        err << "tracesum: cannot write '" << config.output.path << "'\n";
        return kExitUsage;
      }
      file << buffer.str();
    }
    return status;
  }
  catch (const Error &e)
  {
    err << "tracesum: " << e.what() << "\n";
    return exit_status(e.code());
  }
  catch (const std::exception &e)
  {
    err << "tracesum: internal error: " << e.what() << "\n";
    return kExitNumeric;
  }
}

}  // namespace tracesum
