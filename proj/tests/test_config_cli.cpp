#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "tracesum/cli.hpp"
#include "tracesum/config.hpp"
#include "tracesum/errors.hpp"

using namespace tracesum;
namespace fs = std::filesystem;

namespace
{

fs::path scratch_dir()
{
  const fs::path d = fs::temp_directory_path() / ("tracesum_cli_" + std::to_string(::getpid()));
  fs::create_directories(d);
  return d;
}

fs::path write_file(const std::string &name, const std::string &text)
{
  const fs::path p = scratch_dir() / name;
  std::ofstream(p) << text;
  return p;
}

struct CliResult
{
  int status;
  std::string out, err;
};

CliResult run(std::vector<std::string> args)
{
  args.insert(args.begin(), "tracesum");
  std::vector<const char *> argv;
  for (const auto &a : args)
    argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int status = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {status, out.str(), err.str()};
}

std::string validation_message(const std::string &yaml, const std::string &base = ".")
{
  try
  {
    parse_config(yaml, base);
  }
  catch (const Error &e)
  {
    return e.what();
  }
  return "";
}

const char *single_delta = "model: delta_line\n"
                           "geometry:\n"
                           "  points: [0.0]\n"
                           "extension:\n"
                           "  preset: delta\n"
                           "  strengths: [-2.0]\n";

}  // namespace

TEST_CASE("minimal config gets defaults")
{
  const auto c = parse_config("model: cylinder_flat\ngeometry:\n  cutoff: 3\n");
  CHECK(c.model == ModelKind::CylinderFlat);
  CHECK(c.base_point == 0.0);
  CHECK(c.extension.preset == "decoupled");
  CHECK(c.mode_indices() == std::vector<int>{-3, -2, -1, 1, 2, 3});
  CHECK(c.trace_dim() == 6);
  CHECK(c.output.format == "json");

  const auto l = parse_config(single_delta);
  CHECK(l.base_point == 1.0);
  CHECK(l.trace_dim() == 2);
  CHECK(l.oracle_h() == 1e-3);
}

TEST_CASE("validation errors")
{
  CHECK(validation_message("model: grushin\ngeometry:\n  cutoff: 8\n  alpha: 1.5\n").find("geometry.alpha: alpha out of (0,1)") !=
        std::string::npos);

  const auto pi = write_file("pi3.csv", "1,0,0\n0,1,0\n0,0,1\n");
  const std::string bad_dim = "model: delta_line\ngeometry:\n  points: [0.0]\nextension:\n  preset: explicit\n"
                              "  pi_file: " + pi.string() + "\n";
  const std::string msg = validation_message(bad_dim);
  CHECK(msg.find("matrix is 3x3, expected m x m with m = 2") != std::string::npos);

  // Every problem is reported at once.
  const std::string many = "model: delta_line\ngeometry:\n  points: [1.0, 0.0]\nextension:\n  preset: delta\n"
                           "  strengths: [-1.0]\nsearch:\n  z_min: 5\n  z_max: 1\nbogus: 3\n";
  const std::string all = validation_message(many);
  CHECK(all.find("ValidationError") != std::string::npos);
  CHECK(all.find("geometry.points") != std::string::npos);
  CHECK(all.find("extension.strengths") != std::string::npos);
  CHECK(all.find("z_min must be below z_max") != std::string::npos);
  CHECK(all.find("bogus: unknown key") != std::string::npos);
  CHECK(all.find("line 10") != std::string::npos);

  CHECK(validation_message("model: nope\n").find("unknown model 'nope'") != std::string::npos);
}

TEST_CASE("YAML syntax errors carry a location")
{
  const std::string msg = validation_message("model: delta_line\ngeometry:\n  points: [0.0\n");
  CHECK(msg.find("ParseError") != std::string::npos);
  CHECK(msg.find("line ") != std::string::npos);
  CHECK(msg.find("column ") != std::string::npos);
}

TEST_CASE("serialization round trip")
{
  const auto c = parse_config(single_delta);
  const std::string once = serialize_config(c);
  const std::string twice = serialize_config(parse_config(once));
  CHECK(once == twice);
  CHECK(once.find("preset: delta") != std::string::npos);
}

TEST_CASE("CLI commands and exit codes")
{
  const auto delta = write_file("delta.yaml", single_delta);
  const auto modes = write_file("modes.yaml", "model: cylinder_flat\ngeometry:\n  cutoff: 4\n");
  const auto grushin = write_file("grushin.yaml", "model: grushin\ngeometry:\n  cutoff: 256\n  modes: positive\n"
                                                  "  alpha: 0.5\n");

  const auto gram = run({"gram", "--config", modes.string(), "--format", "csv"});
  CHECK(gram.status == kExitPass);
  CHECK(std::count(gram.out.begin(), gram.out.end(), '\n') == 9);
  CHECK(gram.out.rfind("block_index,row,col,value\n", 0) == 0);

  const auto eigs = run({"eigs", "--config", delta.string()});
  CHECK(eigs.status == kExitPass);
  const auto e = eigs.out.find("\"E\": -1.0000000000000");
  CHECK(e != std::string::npos);

  const auto fit = run({"fit-exponent", "--config", grushin.string()});
  CHECK(fit.status == kExitPass);
  const auto pos = fit.out.find("\"slope\": ");
  REQUIRE(pos != std::string::npos);
  CHECK(std::stod(fit.out.substr(pos + 9)) == doctest::Approx(1.0 / 3.0).epsilon(3e-3));

  // Byte-identical reruns.
  CHECK(run({"eigs", "--config", delta.string()}).out == eigs.out);
  CHECK(run({"oracle-compare", "--config", delta.string(), "--format", "csv"}).out ==
        run({"oracle-compare", "--config", delta.string(), "--format", "csv"}).out);

  CHECK(run({"oracle-compare", "--config", delta.string()}).status == kExitPass);
  CHECK(run({"resolvent-check", "--config", delta.string()}).status == kExitPass);
  CHECK(run({"lift-check", "--config", delta.string()}).status == kExitPass);
  CHECK(run({"weyl", "--config", delta.string()}).status == kExitPass);
  CHECK(run({"secular-scan", "--config", delta.string(), "--format", "csv"}).status == kExitPass);
  CHECK(run({"weights", "--config", modes.string()}).status == kExitPass);

  // Usage errors.
  CHECK(run({"eigs", "--config", (scratch_dir() / "missing.yaml").string()}).status == kExitUsage);
  CHECK(run({"frobnicate", "--config", delta.string()}).status == kExitUsage);
  const auto bad = write_file("bad.yaml", "model: grushin\ngeometry:\n  alpha: 2\n");
  const auto r = run({"eigs", "--config", bad.string()});
  CHECK(r.status == kExitUsage);
  CHECK(r.err.find("geometry.alpha") != std::string::npos);

  // A search starting inside a block spectrum is a numeric failure.
  const auto hit = write_file("hit.yaml", std::string(single_delta) + "search:\n  z_min: -1\n");
  CHECK(run({"eigs", "--config", hit.string()}).status == kExitNumeric);
  CHECK(exit_status(ErrorCode::BasePointInSpectrum) == kExitNumeric);
  CHECK(exit_status(ErrorCode::ValidationError) == kExitUsage);
}

TEST_CASE("output file option")
{
  const auto delta = write_file("delta_out.yaml", single_delta);
  const auto out = scratch_dir() / "roots.json";
  CHECK(run({"eigs", "--config", delta.string(), "--out", out.string()}).status == kExitPass);
  std::ifstream in(out);
  std::stringstream ss;
  ss << in.rdbuf();
  CHECK(ss.str().find("\"source\": \"krein\"") != std::string::npos);
}
