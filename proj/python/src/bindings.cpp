#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>
#include <sstream>

#include "tracesum/blocks.hpp"
#include "tracesum/cli.hpp"
#include "tracesum/errors.hpp"
#include "tracesum/krein.hpp"
#include "tracesum/oracle.hpp"
#include "tracesum/trace_sum.hpp"

namespace py = pybind11;
using namespace tracesum;

namespace
{

Representation parse_representation(const std::string &name)
{
  if (name == "renormed")
    return Representation::Renormed;
  if (name == "regularized")
    return Representation::Regularized;
  throw Error(ErrorCode::InvalidSpec, "representation must be 'renormed' or 'regularized'");
}

py::list roots_to_list(const SpectrumReport &r)
{
  py::list out;
  for (const auto &root : r.roots)
  {
    py::dict d;
    d["z"] = root.z;
    d["E"] = root.energy;
    d["residual"] = root.residual;
    d["multiplicity"] = root.multiplicity;
    out.append(d);
  }
  return out;
}

py::list line_spectrum(const std::vector<double> &points, const std::vector<double> &strengths,
                       std::optional<double> wall, CouplingKind kind, const std::string &representation,
                       double z_min, double z_max)
{
  const auto problem = assemble_problem(line_blocks(points, wall), 1.0);
  std::vector<PointCoupling> couplings;
  for (double s : strengths)
  {
    couplings.push_back({kind, s});
  }
  const SecularSystem sys(problem, coupling_params(problem, couplings, parse_representation(representation)));
  SearchOptions opts;
  opts.z_min = z_min;
  opts.z_max = z_max;
  return roots_to_list(sys.find_eigenvalues(opts));
}

}  // namespace

PYBIND11_MODULE(_tracesum, m)
{
  m.doc() = "Trace maps, Krein extensions and point-interaction spectra";
  py::register_exception<Error>(m, "TracesumError", PyExc_RuntimeError);

  m.def(
    "gram_interval", [](double a, double b, double lam) { return BlockOperator(BlockSpec::interval(a, b)).gram(lam); },
    py::arg("a"), py::arg("b"), py::arg("base_point") = 0.0, "Gram matrix of an interval block.");
  m.def(
    "gram_flat", [](int k, double lam) { return BlockOperator(BlockSpec::flat_mode(k)).gram(lam)(0, 0).real(); },
    py::arg("k"), py::arg("base_point") = 0.0, "Gram of a flat cylinder mode.");
  m.def(
    "gram_grushin",
    [](int k, double alpha) { return BlockOperator(BlockSpec::grushin_mode(k, alpha)).gram(0.0)(0, 0).real(); },
    py::arg("k"), py::arg("alpha"), "Gram of a Grushin mode at base point 0.");

  m.def(
    "delta_spectrum",
    [](const std::vector<double> &points, const std::vector<double> &strengths, std::optional<double> wall,
       const std::string &representation, double z_min, double z_max) {
      return line_spectrum(points, strengths, wall, CouplingKind::Delta, representation, z_min, z_max);
    },
    py::arg("points"), py::arg("strengths"), py::arg("wall") = py::none(), py::arg("representation") = "renormed",
    py::arg("z_min") = 1e-6, py::arg("z_max") = 100.0, "Bound states of delta interactions on the line.");
  m.def(
    "delta_prime_spectrum",
    [](const std::vector<double> &points, const std::vector<double> &strengths, std::optional<double> wall,
       const std::string &representation, double z_min, double z_max) {
      return line_spectrum(points, strengths, wall, CouplingKind::DeltaPrime, representation, z_min, z_max);
    },
    py::arg("points"), py::arg("strengths"), py::arg("wall") = py::none(), py::arg("representation") = "renormed",
    py::arg("z_min") = 1e-6, py::arg("z_max") = 100.0, "Bound states of delta-prime interactions on the line.");

  m.def(
    "oracle_spectrum",
    [](const std::vector<double> &points, const std::vector<double> &strengths, const std::string &kind,
       std::optional<double> wall, double e_min) {
      if (kind != "delta" && kind != "delta_prime")
      {
        throw Error(ErrorCode::InvalidSpec, "kind must be 'delta' or 'delta_prime'");
      }
      const auto model =
        kind == "delta" ? delta_model(points, strengths, wall) : delta_prime_model(points, strengths, wall);
      std::vector<double> e;
      for (const auto &root : transfer_matrix_spectrum(model, e_min, -1e-6).roots)
      {
        e.push_back(root.energy);
      }
      std::sort(e.begin(), e.end());
      return e;
    },
    py::arg("points"), py::arg("strengths"), py::arg("kind") = "delta", py::arg("wall") = py::none(),
    py::arg("e_min") = -100.0, "Transfer-matrix bound state energies, ascending.");

  m.def(
    "run",
    [](const std::vector<std::string> &args) {
      std::vector<std::string> full{"tracesum"};
      full.insert(full.end(), args.begin(), args.end());
      std::vector<const char *> argv;
      for (const auto &a : full)
      {
        argv.push_back(a.c_str());
      }
      std::ostringstream out, err;
      const int status = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
      return py::make_tuple(status, out.str(), err.str());
    },
    py::arg("args"), "Runs the command-line tool in process; returns (status, stdout, stderr).");
}
