#include <catch2/catch_amalgamated.hpp>

#include <algorithm>

#include "fixtures.hpp"

using namespace mdpconc;

namespace {

InducedChain chain_from_rows(std::vector<std::vector<double>> rows) {
  const int n = static_cast<int>(rows.size());
  InducedChain chain{Matrix(n, n), Vec(n, 0.0)};
  for (int s = 0; s < n; ++s)
    for (int s2 = 0; s2 < n; ++s2) chain.transition(s, s2) = rows[s][s2];
  return chain;
}

}  // namespace

TEST_CASE("classify_chain on a 2-cycle") {
  const ChainStructure s = classify_chain(chain_from_rows({{0, 1}, {1, 0}}));
  REQUIRE(s.recurrent_classes.size() == 1);
  CHECK(s.recurrent_classes[0] == std::vector<int>{0, 1});
  CHECK(s.transient_states.empty());
}

TEST_CASE("classify_chain with an absorbing state and a transient") {
  const ChainStructure s = classify_chain(chain_from_rows({{1, 0}, {0.5, 0.5}}));
  REQUIRE(s.recurrent_classes.size() == 1);
  CHECK(s.recurrent_classes[0] == std::vector<int>{0});
  CHECK(s.transient_states == std::vector<int>{1});
}

TEST_CASE("classify_chain with two absorbing states") {
  const ChainStructure s = classify_chain(chain_from_rows({{1, 0}, {0, 1}}));
  REQUIRE(s.recurrent_classes.size() == 2);
  CHECK(s.transient_states.empty());
}

TEST_CASE("classify_chain is equivariant under state relabeling") {
  const MdpModel m = random_model(5, 2, 1.0, ModelStructure::dense, 21);
  const InducedChain chain = induced_chain(m, StationaryPolicy{{0, 1, 0, 1, 0}});
  const std::vector<int> perm{3, 0, 4, 1, 2};  // new index of each old state
  InducedChain permuted{Matrix(5, 5), Vec(5, 0.0)};
  for (int s = 0; s < 5; ++s)
    for (int s2 = 0; s2 < 5; ++s2)
      permuted.transition(perm[s], perm[s2]) = chain.transition(s, s2);

  ChainStructure base = classify_chain(chain);
  ChainStructure relabeled = classify_chain(permuted);
  auto map_classes = [&](ChainStructure s) {
    for (auto& cls : s.recurrent_classes) {
      for (int& v : cls) v = perm[v];
      std::sort(cls.begin(), cls.end());
    }
    for (int& v : s.transient_states) v = perm[v];
    std::sort(s.transient_states.begin(), s.transient_states.end());
    std::sort(s.recurrent_classes.begin(), s.recurrent_classes.end());
    return s;
  };
  const ChainStructure mapped = map_classes(base);
  CHECK(mapped.recurrent_classes == relabeled.recurrent_classes);
  CHECK(mapped.transient_states == relabeled.transient_states);
}

TEST_CASE("is_communicating") {
  CHECK(is_communicating(fixtures::swap_model()));
  CHECK(is_communicating(fixtures::cycle_model(3)));
  CHECK_FALSE(is_communicating(fixtures::weakly_comm_model()));

  // A model with an inescapable sink is not communicating.
  MdpModel sink;
  sink.n_states = 2;
  sink.n_actions = 2;
  sink.r_max = 1.0;
  sink.transition = {0.5, 0.5, 1, 0, 0, 1, 0, 1};
  sink.reward = {0, 0, 0, 0};
  sink = validate_model(std::move(sink));
  CHECK_FALSE(is_communicating(sink));
}

TEST_CASE("classify_model on the symmetric model") {
  const MdpClass cls = classify_model(fixtures::symmetric_model());
  CHECK(cls.recurrent == Flag::yes);
  CHECK(cls.unichain == Flag::yes);
  CHECK(cls.communicating == Flag::yes);
  CHECK(cls.weakly_communicating == Flag::yes);
  CHECK(cls.enumerated);
  CHECK(cls.n_policies == 4);
}

TEST_CASE("classify_model with two absorbing actions") {
  const MdpClass cls = classify_model(fixtures::stay_swap_model(1.0, 0.0));
  CHECK(cls.recurrent == Flag::no);
  CHECK(cls.unichain == Flag::no);
  CHECK(cls.communicating == Flag::yes);
  CHECK(cls.weakly_communicating == Flag::yes);
}

TEST_CASE("classify_model on a weakly communicating model") {
  const MdpClass cls = classify_model(fixtures::weakly_comm_model());
  CHECK(cls.recurrent == Flag::no);
  CHECK(cls.unichain == Flag::yes);
  CHECK(cls.communicating == Flag::no);
  CHECK(cls.weakly_communicating == Flag::yes);
}

TEST_CASE("classify_model on two isolated absorbing states") {
  // No action connects the states: not even weakly communicating.
  MdpModel m;
  m.n_states = 2;
  m.n_actions = 1;
  m.r_max = 1.0;
  m.transition = {1, 0, 0, 1};
  m.reward = {1.0, 0.0};
  m = validate_model(std::move(m));
  const MdpClass cls = classify_model(m);
  CHECK(cls.recurrent == Flag::no);
  CHECK(cls.unichain == Flag::no);
  CHECK(cls.communicating == Flag::no);
  CHECK(cls.weakly_communicating == Flag::no);
}

TEST_CASE("classify_model leaves enumeration flags unknown past the cap") {
  const MdpModel m = random_model(12, 4, 1.0, ModelStructure::dense, 2);
  const MdpClass cls = classify_model(m, 1000000);
  CHECK(cls.recurrent == Flag::unknown);
  CHECK(cls.unichain == Flag::unknown);
  CHECK(cls.weakly_communicating == Flag::unknown);
  CHECK(cls.communicating != Flag::unknown);
  CHECK_FALSE(cls.enumerated);
}

TEST_CASE("class implication chain holds whenever flags are decided") {
  int checked = 0;
  for (std::uint64_t seed = 1; seed <= 12; ++seed) {
    const auto structure = seed % 3 == 0   ? ModelStructure::dense
                           : seed % 3 == 1 ? ModelStructure::communicating
                                           : ModelStructure::unichain;
    const MdpModel m = random_model(3 + static_cast<int>(seed % 3), 2, 1.0, structure, seed);
    const MdpClass cls = classify_model(m);
    if (!cls.enumerated) continue;
    ++checked;
    if (cls.recurrent == Flag::yes) CHECK(cls.unichain == Flag::yes);
    if (cls.unichain == Flag::yes) CHECK(cls.weakly_communicating == Flag::yes);
    if (cls.communicating == Flag::yes) CHECK(cls.weakly_communicating == Flag::yes);
  }
  REQUIRE(checked > 0);
}

TEST_CASE("in_pi_ar on unichain induced chains") {
  const MdpModel m = fixtures::symmetric_model();
  for (const StationaryPolicy& pi : enumerate_policies(m, 100)) CHECK(in_pi_ar(m, pi));
}

TEST_CASE("in_pi_ar distinguishes per-class gains on multichain policies") {
  const StationaryPolicy both_stay{{0, 0}};
  CHECK_FALSE(in_pi_ar(fixtures::stay_swap_model(1.0, 0.0), both_stay));
  CHECK(in_pi_ar(fixtures::stay_swap_model(0.5, 0.5), both_stay));
}

TEST_CASE("every policy of a unichain model is in the gain-unique class") {
  const MdpModel m = random_model(4, 3, 1.0, ModelStructure::unichain, 9);
  const MdpClass cls = classify_model(m);
  REQUIRE(cls.unichain == Flag::yes);
  for (const StationaryPolicy& pi : enumerate_policies(m, 1000)) CHECK(in_pi_ar(m, pi));
}

TEST_CASE("class stationary distribution matches the cycle chain") {
  const MdpModel m = fixtures::cycle_model(4);
  const InducedChain chain = induced_chain(m, StationaryPolicy{{0, 0, 0, 0}});
  const Vec mu = class_stationary_distribution(chain, {0, 1, 2, 3});
  for (double x : mu) CHECK(x == Catch::Approx(0.25).margin(1e-12));
  CHECK(class_gain(chain, {0, 1, 2, 3}) == Catch::Approx(0.25).margin(1e-12));
}
