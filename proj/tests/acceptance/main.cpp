// Acceptance runner: one PASS/FAIL line per criterion. With arguments, runs
// only the listed criterion numbers.

#include <cstdio>
#include <cstdlib>
#include <exception>
#include <functional>
#include <set>
#include <string>
#include <vector>

#include "acceptance.hpp"

using acceptance::CriterionResult;

namespace {

void report(const CriterionResult& r) {
  std::printf("criterion %d %-30s %s  %7.1f s  %s\n", r.id, r.name.c_str(),
              r.pass ? "PASS" : "FAIL", r.seconds, r.detail.c_str());
  std::fflush(stdout);
}

CriterionResult failed(int id, const std::string& why) {
  return {id, "(aborted)", false, "exception: " + why, 0.0};
}

}  // namespace

int main(int argc, char** argv) {
  std::set<int> wanted;
  for (int i = 1; i < argc; ++i) {
    const int id = std::atoi(argv[i]);
    if (id < 1 || id > 9) {
      std::fprintf(stderr, "usage: %s [criterion 1-9 ...]\n", argv[0]);
      return 2;
    }
    wanted.insert(id);
  }
  auto want = [&](int id) { return wanted.empty() || wanted.count(id) > 0; };

  const std::vector<std::pair<int, std::function<CriterionResult()>>> quick = {
      {1, acceptance::loss_algebra},       {2, acceptance::gradient_suite},
      {3, acceptance::dilated_conv_oracle}, {4, acceptance::architecture_audit},
      {5, acceptance::metrics_oracle},     {6, acceptance::postprocessing_direction},
      {9, acceptance::volume_io}};

  std::vector<CriterionResult> results;
  auto run = [&](int id, const std::function<CriterionResult()>& fn) {
    try {
      results.push_back(fn());
    } catch (const std::exception& e) {
      results.push_back(failed(id, e.what()));
    }
    report(results.back());
  };

  for (const auto& [id, fn] : quick) {
    if (id == 9 && (want(7) || want(8))) continue;  // keep the report in order
    if (want(id)) run(id, fn);
  }
  if (want(7) || want(8)) {
    try {
      for (auto& r : acceptance::training_and_determinism(want(7), want(8))) {
        results.push_back(r);
        report(r);
      }
    } catch (const std::exception& e) {
      for (int id : {7, 8}) {
        if (!want(id)) continue;
        results.push_back(failed(id, e.what()));
        report(results.back());
      }
    }
    if (want(9)) run(9, acceptance::volume_io);
  }

  int failures = 0;
  for (const auto& r : results) failures += r.pass ? 0 : 1;
  std::printf("%zu criteria, %d failed\n", results.size(), failures);
  return failures == 0 ? 0 : 1;
}
