#include <gtest/gtest.h>

#include <iostream>

#include "rcising/verification.hpp"

namespace rcising {
namespace {

void print_failures(const SuiteReport& report) {
  for (const auto& [name, worst] : report.worst()) std::cout << name << " worst " << worst << "\n";
  int shown = 0;
  for (const Check& c : report.checks)
    if (!c.passed && shown++ < 10)
      std::cout << "FAIL " << c.name << " #" << c.instance << " lhs=" << c.lhs << " rhs=" << c.rhs
                << " res=" << c.residual << "\n";
}

TEST(Suites, IdentitiesOnCorpus) {
  CorpusOptions opts;
  opts.count = 60;
  const auto report = identity_suite(random_corpus(opts));
  print_failures(report);
  EXPECT_TRUE(report.passed());
}

TEST(Suites, SwitchingOnCorpus) {
  CorpusOptions opts;
  opts.count = 60;
  const auto report = switching_suite(random_corpus(opts));
  print_failures(report);
  EXPECT_TRUE(report.passed());
}

TEST(Suites, InequalitiesOnCorpus) {
  CorpusOptions opts;
  opts.count = 60;
  const auto report = inequality_suite(random_corpus(opts));
  print_failures(report);
  EXPECT_TRUE(report.passed());
}

TEST(Suites, Pfaffian) {
  PfaffianSuiteOptions opts;
  opts.subsets_per_case = 4;
  const auto report = pfaffian_suite(opts);
  print_failures(report);
  EXPECT_TRUE(report.passed());
}

}  // namespace
}  // namespace rcising
