#include <doctest.h>

#include <fstream>
#include <random>

#include "opfsdr/admittance.hpp"
#include "opfsdr/matpower.hpp"
#include "opfsdr/netjson.hpp"
#include "support/fixtures.hpp"

using namespace opfsdr;
using opfsdr::testing::random_network;
using opfsdr::testing::SynthOptions;

namespace {

const char* kTwoBusCase = R"(function mpc = case2
mpc.version = '2';
mpc.baseMVA = 100;
mpc.bus = [
  1 3 0   0  0 0 1 1.0 0 345 1 1.05 0.95;
  2 1 40 10  0 0 1 1.0 0 345 1 1.05 0.95;
];
mpc.gen = [
  1 0 0 50 -50 1.0 100 1 100 0;
];
mpc.branch = [
  1 2 0.02 0.1 0.02 100 0 0 0 0 1 -360 360;
];
mpc.gencost = [
  2 0 0 3 0.01 10 50;
];
)";

}  // namespace

TEST_CASE("matpower: hand-written two-bus case") {
  const Network net = parse_matpower_case(kTwoBusCase);
  CHECK(net.n_buses() == 2);
  CHECK(net.n_generators() == 1);
  CHECK(net.n_branches() == 1);
  CHECK(net.base_mva == doctest::Approx(100.0));
  CHECK(net.buses[1].p_demand == doctest::Approx(0.4));
  CHECK(net.buses[1].q_demand == doctest::Approx(0.1));
  // gencost 0.01 $/MW^2 -> alpha in per unit: 0.01 * 100^2 = 100
  CHECK(net.generators[0].alpha == doctest::Approx(100.0));
  CHECK(net.generators[0].beta == doctest::Approx(1000.0));
  CHECK(net.generators[0].cost_const == doctest::Approx(50.0));
  CHECK(net.generators[0].kind == GenKind::Quadratic);
  CHECK(net.branches[0].s_max.has_value());
  CHECK(*net.branches[0].s_max == doctest::Approx(1.0));
  CHECK(net.flow_limited == std::vector<int>{0});
}

TEST_CASE("matpower: missing bus matrix is a parse error") {
  CHECK_THROWS_AS(parse_matpower_case("function mpc = x\nmpc.baseMVA = 100;\n"),
                  ParseError);
}

TEST_CASE("matpower: piecewise-linear cost is rejected") {
  std::string text = kTwoBusCase;
  const auto at = text.find("2 0 0 3 0.01 10 50;");
  text.replace(at, 1, "1");
  CHECK_THROWS_AS(parse_matpower_case(text), ParseError);
}

TEST_CASE("matpower: out-of-service equipment is dropped before validation") {
  std::string text = R"(function mpc = case3
mpc.baseMVA = 100;
mpc.bus = [
  1 3 0   0  0 0 1 1.0 0 345 1 1.05 0.95;
  2 1 40 10  0 0 1 1.0 0 345 1 1.05 0.95;
  3 1 10  2  0 0 1 1.0 0 345 1 1.05 0.95;
];
mpc.gen = [
  1 0 0 50 -50 1.0 100 1 100 0;
  3 0 0 50 -50 1.0 100 0 100 0;
];
mpc.branch = [
  1 2 0.02 0.1 0.02 0 0 0 0 0 1 -360 360;
  2 3 0.02 0.1 0.02 0 0 0 0 0 1 -360 360;
  1 3 0.02 0.1 0.02 0 0 0 0 0 0 -360 360;
];
mpc.gencost = [
  2 0 0 3 0.01 10 0;
  2 0 0 3 0.01 10 0;
];
)";
  const Network net = parse_matpower_case(text);
  CHECK(net.n_generators() == 1);
  CHECK(net.n_branches() == 2);  // third branch out of service
  CHECK(net.flow_limited.empty());  // RATE_A = 0 means unlimited
}

TEST_CASE("matpower: rejects RATE_A edge and self loop") {
  std::string text = kTwoBusCase;
  const auto at = text.find("1 2 0.02");
  text.replace(at, 3, "1 1");
  CHECK_THROWS_AS(parse_matpower_case(text), ParseError);
}

TEST_CASE("json round trip is the identity on parsed networks") {
  std::mt19937 rng(7);
  for (int trial = 0; trial < 5; ++trial) {
    SynthOptions opts;
    opts.n_buses = 8;
    opts.with_flow_limits = true;
    const Network net = random_network(rng, opts).network;
    const std::string text = serialize_network_json(net);
    const Network back = parse_network_json(text);
    CHECK(serialize_network_json(back) == text);
  }
}

TEST_CASE("json: missing buses key names the key") {
  try {
    parse_network_json(R"({"schema_version": 1, "generators": [], "branches": []})");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("buses") != std::string::npos);
  }
}

TEST_CASE("json: three-bus ring document") {
  const std::string text = serialize_network_json(opfsdr::testing::three_bus_ring());
  const Network net = parse_network_json(text);
  CHECK(net.n_branches() == 3);
}

TEST_CASE("fix_tight_generators pins to the midpoint") {
  Network net = opfsdr::testing::two_bus();
  net.generators[0].p_min = 0.49999;
  net.generators[0].p_max = 0.50003;
  const Network fixed = fix_tight_generators(net);
  CHECK(fixed.generators[0].kind == GenKind::Fixed);
  CHECK(fixed.generators[0].p_min == doctest::Approx(0.50001));
  CHECK(fixed.generators[0].p_max == doctest::Approx(0.50001));

  // Equal bounds pin trivially.
  net.generators[0].p_min = net.generators[0].p_max = 0.5;
  CHECK(fix_tight_generators(net).generators[0].p_fixed() == doctest::Approx(0.5));

  // Wide gap: unchanged.
  net.generators[0].p_min = 0.0;
  net.generators[0].p_max = 0.5;
  CHECK(fix_tight_generators(net).generators[0].kind == GenKind::Quadratic);

  // Idempotent.
  const Network twice = fix_tight_generators(fix_tight_generators(net));
  CHECK(twice.generators[0].p_min == fix_tight_generators(net).generators[0].p_min);
}

TEST_CASE("apply_min_resistance raises small r only") {
  Network net = opfsdr::testing::three_bus_ring();
  net.branches[0].r = 0.0;
  net.branches[1].r = 0.05;
  net.branches[2].r = 5e-5;
  const Network out = apply_min_resistance(net);
  CHECK(out.branches[0].r == doctest::Approx(1e-4));
  CHECK(out.branches[1].r == doctest::Approx(0.05));
  CHECK(out.branches[2].r == doctest::Approx(1e-4));
  // idempotent
  const Network again = apply_min_resistance(out);
  for (int b = 0; b < 3; ++b) CHECK(again.branches[b].r == out.branches[b].r);
}

TEST_CASE("admittance: lossless line oracle") {
  Network net = opfsdr::testing::two_bus();
  net.branches[0].r = 0.0;
  net.branches[0].x = 0.1;
  net.branches[0].b_charging = 0.0;
  const ComplexSparseMatrix y = build_admittance(net);
  CHECK(std::abs(y.at(0, 0) - cplx(0, -10)) < 1e-12);
  CHECK(std::abs(y.at(0, 1) - cplx(0, 10)) < 1e-12);
  CHECK(std::abs(y.at(1, 0) - cplx(0, 10)) < 1e-12);
  CHECK(std::abs(y.at(1, 1) - cplx(0, -10)) < 1e-12);

  net.branches[0].b_charging = 0.2;
  const ComplexSparseMatrix y2 = build_admittance(net);
  CHECK(std::abs(y2.at(0, 0) - cplx(0, -9.9)) < 1e-12);
  CHECK(std::abs(y2.at(1, 1) - cplx(0, -9.9)) < 1e-12);
}

TEST_CASE("admittance: shunt-only bus") {
  Network net;
  net.buses = {{1, 0.9, 1.1, 0, 0, 1.0, 2.0}};
  const ComplexSparseMatrix y = build_admittance(net);
  CHECK(y.nnz() == 1);
  CHECK(std::abs(y.at(0, 0) - cplx(1.0, 2.0)) < 1e-15);
}

TEST_CASE("admittance: zero-impedance branch is singular") {
  Network net = opfsdr::testing::two_bus();
  net.branches[0].r = 0.0;
  net.branches[0].x = 0.0;
  CHECK_THROWS_AS(build_admittance(net), SingularBranch);
}

TEST_CASE("admittance: parallel branches sum") {
  Network net = opfsdr::testing::two_bus();
  net.branches.push_back(net.branches[0]);
  net.flow_limited = {};
  const ComplexSparseMatrix y1 = build_admittance(opfsdr::testing::two_bus());
  const ComplexSparseMatrix y2 = build_admittance(net);
  CHECK(std::abs(y2.at(0, 1) - 2.0 * y1.at(0, 1)) < 1e-12);
}

TEST_CASE("injection matrices reproduce complex power") {
  std::mt19937 rng(11);
  SynthOptions opts;
  opts.n_buses = 9;
  const Network net = random_network(rng, opts).network;
  const ComplexSparseMatrix y = build_admittance(net);
  Eigen::VectorXcd v(net.n_buses());
  std::uniform_real_distribution<double> unit(-0.5, 0.5);
  for (int k = 0; k < net.n_buses(); ++k) v(k) = std::polar(1.0 + 0.1 * unit(rng), unit(rng));
  const Eigen::VectorXcd i = y.multiply(v);
  cplx total(0, 0);
  for (int k = 0; k < net.n_buses(); ++k) {
    const InjectionPair inj = bus_injection_matrices(y, k);
    CHECK(inj.active.is_hermitian(1e-14));
    CHECK(inj.reactive.is_hermitian(1e-14));
    const cplx s_k = v(k) * std::conj(i(k));
    CHECK(inj.active.quadratic_form(v).real() == doctest::Approx(s_k.real()).epsilon(1e-10));
    CHECK(inj.reactive.quadratic_form(v).real() ==
          doctest::Approx(s_k.imag()).epsilon(1e-10));
    // sparsity confined to row/column k
    for (const Triplet& t : inj.active.entries()) {
      CHECK((t.row == k || t.col == k));
    }
    total += cplx(inj.active.quadratic_form(v).real(), inj.reactive.quadratic_form(v).real());
  }
  // sum over k matches total injection
  cplx expected(0, 0);
  for (int k = 0; k < net.n_buses(); ++k) expected += std::conj(i(k)) * v(k);
  CHECK(std::abs(total - expected) < 1e-10 * (1.0 + std::abs(expected)));
}

TEST_CASE("injection matrices: identity Y") {
  std::vector<Triplet> trip{{0, 0, {1, 0}}, {1, 1, {1, 0}}};
  const auto y = ComplexSparseMatrix::from_triplets(2, trip);
  const InjectionPair inj = bus_injection_matrices(y, 0);
  CHECK(std::abs(inj.active.at(0, 0) - cplx(1, 0)) < 1e-15);
  CHECK(inj.active.nnz() == 1);
  CHECK(inj.reactive.nnz() == 0);
  CHECK_THROWS_AS(bus_injection_matrices(y, 5), DimensionMismatch);
}

TEST_CASE("flow matrices match the direct branch equations") {
  std::mt19937 rng(13);
  SynthOptions opts;
  opts.n_buses = 7;
  const Network net = random_network(rng, opts).network;
  Eigen::VectorXcd v(net.n_buses());
  std::uniform_real_distribution<double> unit(-0.5, 0.5);
  for (int k = 0; k < net.n_buses(); ++k) v(k) = std::polar(1.0 + 0.1 * unit(rng), unit(rng));
  for (int b = 0; b < net.n_branches(); ++b) {
    const Branch& br = net.branches[b];
    const FlowMatrices fm = branch_flow_matrices(net, b);
    const BranchAdmittance a = branch_admittance(br);
    const cplx i_from = a.from_from * v(br.from) + a.from_to * v(br.to);
    const cplx i_to = a.to_from * v(br.from) + a.to_to * v(br.to);
    const cplx s_from = v(br.from) * std::conj(i_from);
    const cplx s_to = v(br.to) * std::conj(i_to);
    CHECK(fm.from_active.quadratic_form(v).real() ==
          doctest::Approx(s_from.real()).epsilon(1e-10));
    CHECK(fm.from_reactive.quadratic_form(v).real() ==
          doctest::Approx(s_from.imag()).epsilon(1e-10));
    CHECK(fm.to_active.quadratic_form(v).real() ==
          doctest::Approx(s_to.real()).epsilon(1e-10));
    CHECK(fm.to_reactive.quadratic_form(v).real() ==
          doctest::Approx(s_to.imag()).epsilon(1e-10));
    for (const auto* m : {&fm.from_active, &fm.from_reactive, &fm.to_active,
                          &fm.to_reactive}) {
      CHECK(m->is_hermitian(1e-14));
      for (const Triplet& t : m->entries()) {
        CHECK((t.row == br.from || t.row == br.to));
        CHECK((t.col == br.from || t.col == br.to));
      }
    }
  }
}

TEST_CASE("flow matrices: line loss is PSD for r > 0") {
  Network net = opfsdr::testing::two_bus();
  net.branches[0].b_charging = 0.0;
  net.branches[0].tap_ratio = 1.0;
  net.branches[0].phase_shift = 0.0;
  const FlowMatrices fm = branch_flow_matrices(net, 0);
  std::vector<Triplet> sum;
  for (const Triplet& t : fm.from_active.entries()) sum.push_back(t);
  for (const Triplet& t : fm.to_active.entries()) sum.push_back(t);
  const auto loss = ComplexSparseMatrix::from_triplets(net.n_buses(), sum);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(loss.dense());
  CHECK(eig.eigenvalues().minCoeff() >= -1e-12);
}

TEST_CASE("symmetric-branch network has complex symmetric Y") {
  std::mt19937 rng(17);
  SynthOptions opts;
  opts.n_buses = 8;
  Network net = random_network(rng, opts).network;
  for (Branch& br : net.branches) {
    br.tap_ratio = 1.0;
    br.phase_shift = 0.0;
  }
  const ComplexSparseMatrix y = build_admittance(net);
  for (const Triplet& t : y.entries()) {
    CHECK(std::abs(y.at(t.col, t.row) - t.value) < 1e-14);
  }
}

TEST_CASE("benchmark case dimensions") {
  std::ifstream in(opfsdr::testing::data_path("case118.m"));
  REQUIRE(in.good());
  const Network net = parse_matpower_case(in);
  CHECK(net.n_buses() == 118);
  CHECK(net.n_branches() == 186);
  CHECK(net.n_generators() == 54);
  for (const Generator& g : net.generators) CHECK(g.kind == GenKind::Quadratic);
  CHECK(net.flow_limited.empty());
}

TEST_CASE("flow list file: errors and dedup") {
  const Network net = opfsdr::testing::three_bus_ring();
  Network limited = net;
  for (Branch& br : limited.branches) br.s_max = 0.8;
  CHECK(flow_set_from_list(limited, "1\n3\n1\n") == std::vector<int>{0, 2});
  CHECK(flow_set_from_list(limited, "# nothing\n").empty());
  CHECK_THROWS_AS(flow_set_from_list(limited, "4\n"), ParseError);   // out of range
  CHECK_THROWS_AS(flow_set_from_list(net, "1\n"), ParseError);       // no limit
}
