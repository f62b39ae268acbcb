// Regenerates the bundled synthetic study datasets.

#include <fstream>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "gmekit/dataset.hpp"
#include "gmekit/errors.hpp"
#include "gmekit/synthetic.hpp"

int main(int argc, char** argv) {
  CLI::App app{"synthetic dataset generator"};
  std::string which = "redcard";
  std::size_t n = 2000;
  std::uint64_t seed = 1;
  std::string out;
  app.add_option("--which", which, "redcard or inpatient");
  app.add_option("--n", n, "row count");
  app.add_option("--seed", seed, "generator seed");
  app.add_option("-o,--out", out, "output CSV (default: stdout)");

  try {
    app.parse(argc, argv);
    gmekit::Dataset d;
    if (which == "redcard")
      d = gmekit::make_redcard_synthetic(n, seed);
    else if (which == "inpatient")
      d = gmekit::make_inpatient_synthetic(n, seed);
    else
      throw gmekit::ConfigError("--which must be redcard or inpatient");
    if (out.empty()) {
      gmekit::write_csv(std::cout, d);
    } else {
      std::ofstream os(out, std::ios::binary);
      if (!os) throw gmekit::ConfigError("cannot write '" + out + "'");
      gmekit::write_csv(os, d);
    }
    return 0;
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const gmekit::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
