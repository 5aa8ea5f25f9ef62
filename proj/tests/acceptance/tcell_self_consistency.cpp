// Checks that the cached T-cell reference is converged: halving its step
// changes the solution by at most 1e-7 in the max norm.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>

#include "mastereq/problems.hpp"

int main(int argc, char** argv) {
  using namespace mastereq;
  std::filesystem::path dir = argc > 1 ? argv[1] : "";
  auto cached = [&](const char* name) {
    return dir.empty() ? std::filesystem::path{} : dir / name;
  };
  try {
    if (!dir.empty()) std::filesystem::create_directories(dir);
    TcellOptions o;
    Vector coarse = tcell_reference(o, 1e-3, cached("tcell-dt1e-3.txt"));
    Vector fine = tcell_reference(o, 5e-4, cached("tcell-dt5e-4.txt"));
    double diff = 0.0;
    for (std::size_t i = 0; i < coarse.size(); ++i)
      diff = std::max(diff, std::abs(coarse[i] - fine[i]));
    const bool pass = diff <= 1e-7;
    std::printf("%s: reference dt=1e-3 vs dt=5e-4 max difference %.3e (limit 1e-7)\n",
                pass ? "PASS" : "FAIL", diff);
    return pass ? 0 : 1;
  } catch (const std::exception& e) {
    std::printf("FAIL: %s\n", e.what());
    return 1;
  }
}
