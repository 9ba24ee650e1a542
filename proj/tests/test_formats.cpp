#include <doctest.h>

#include <random>

#include "opfsdr/conversion.hpp"
#include "opfsdr/exportfmt.hpp"
#include "opfsdr/formulation.hpp"
#include "opfsdr/pipeline.hpp"
#include "support/cbf_reader.hpp"
#include "support/fixtures.hpp"

using namespace opfsdr;
using namespace opfsdr::testing;

namespace {

constexpr double kSqrt2 = 1.4142135623730951;

// min X22 s.t. X11 = 1, X12 = 2, X psd of order 2 (optimum 4).
ConeLP small_sdp() {
  ConeLP lp;
  lp.cone.segments = {{SegmentKind::SymPsd, 2}};
  lp.h = Eigen::VectorXd::Zero(3);
  lp.h(2) = 1.0;
  LinExpr r0;
  r0.terms = {{0, 1.0}};
  r0.constant = -1.0;
  lp.add_row(r0);
  LinExpr r1;
  r1.terms = {{1, 1.0 / kSqrt2}};
  r1.constant = -2.0;
  lp.add_row(r1);
  return lp;
}

}  // namespace

TEST_CASE("sdpa-sparse golden fixture is byte exact") {
  const std::string expected =
      "\"fixture\n"
      "2 = mDIM\n"
      "1 = nBLOCK\n"
      "2 = bLOCKsTRUCT\n"
      "1 2\n"
      "0 1 2 2 -1\n"
      "1 1 1 1 1\n"
      "2 1 1 2 0.49999999999999989\n";
  CHECK(export_conelp(small_sdp(), ExportFormat::SdpaSparse, "fixture") == expected);
}

TEST_CASE("cbf golden fixture is byte exact") {
  const std::string expected =
      "# fixture\n"
      "VER\n3\n\n"
      "OBJSENSE\nMIN\n\n"
      "PSDVAR\n1\n2\n\n"
      "CON\n2 1\nL= 2\n\n"
      "OBJFCOORD\n1\n0 1 1 1\n\n"
      "FCOORD\n2\n0 0 0 0 1\n1 0 1 0 0.49999999999999989\n\n"
      "BCOORD\n2\n0 -1\n1 -2\n\n";
  CHECK(export_conelp(small_sdp(), ExportFormat::Cbf, "fixture") == expected);
}

TEST_CASE("sdpa-sparse rejects SOC and free segments") {
  const Network net = two_bus();
  const SdrProblem sdr = build_sdr(net);
  // build_sdr output carries SOC3 blocks (and a free epigraph variable)
  CHECK_THROWS_AS(export_conelp(real_embedding(sdr.lp), ExportFormat::SdpaSparse),
                  UnsupportedSegment);
}

TEST_CASE("exporters reject complex-form problems") {
  const Network net = two_bus();
  const SdrProblem sdr = build_sdr(net);
  CHECK_THROWS_AS(export_conelp(sdr.lp, ExportFormat::SdpaSparse), UnsupportedSegment);
  CHECK_THROWS_AS(export_conelp(sdr.lp, ExportFormat::Cbf), UnsupportedSegment);
}

TEST_CASE("sdpa-sparse accepts an LP + PSD problem") {
  ConeLP lp = small_sdp();
  // append a nonnegative variable with a row tying it to the constants
  lp.cone.segments.insert(lp.cone.segments.begin(), {SegmentKind::NonNeg, 2});
  Eigen::VectorXd h = Eigen::VectorXd::Zero(5);
  h.tail(3) = lp.h;
  lp.h = h;
  for (SparseRow& row : lp.rows) {
    for (auto& [idx, v] : row.coeffs) idx += 2;
  }
  LinExpr extra;
  extra.terms = {{0, 1.0}, {1, 2.0}};
  extra.constant = -1.5;
  lp.add_row(extra);
  const std::string text = export_conelp(lp, ExportFormat::SdpaSparse);
  CHECK(text.find("-2 2 = bLOCKsTRUCT") != std::string::npos);
  CHECK(text.find("3 1 1 1 1\n") != std::string::npos);   // row 3, LP block entry 1
  CHECK(text.find("3 1 2 2 2\n") != std::string::npos);
}

TEST_CASE("cbf reader agrees with the exporter on dimensions and counts") {
  std::mt19937 rng(431);
  SynthOptions opts;
  opts.n_buses = 9;
  opts.n_gens = 3;
  opts.with_flow_limits = true;
  const SynthNetwork synth = random_network(rng, opts);
  const SdrProblem sdr = build_sdr(synth.network);

  RunConfig config;
  for (const char* strategy : {"unconverted", "full", "band", "sparse", "soc-minors"}) {
    config.strategy = strategy;
    const ConeLP lp = solver_form(synth.network, sdr, strategy, config);
    const std::string text = export_conelp(lp, ExportFormat::Cbf, "roundtrip");
    const CbfSummary sum = read_cbf(text);
    CHECK(sum.version == 3);
    CHECK(sum.objsense == "MIN");
    CHECK(sum.constraints == lp.num_rows());

    int scalar = 0;
    std::vector<int> psd_orders;
    long expected_f = 0, expected_a = 0, expected_b = 0, expected_objf = 0,
         expected_obja = 0;
    std::vector<char> is_psd(lp.dim(), 0);
    int at = 0;
    for (const ConeSegment& seg : lp.cone.segments) {
      if (seg.kind == SegmentKind::SymPsd) {
        psd_orders.push_back(seg.size);
        for (int i = 0; i < seg.dim(); ++i) is_psd[at + i] = 1;
      } else {
        scalar += seg.dim();
      }
      at += seg.dim();
    }
    for (int i = 0; i < lp.dim(); ++i) {
      if (lp.h(i) != 0.0) (is_psd[i] ? expected_objf : expected_obja) += 1;
    }
    for (int r = 0; r < lp.num_rows(); ++r) {
      for (const auto& [idx, v] : lp.rows[r].coeffs) {
        (is_psd[idx] ? expected_f : expected_a) += 1;
      }
      if (lp.c(r) != 0.0) ++expected_b;
    }
    CHECK(sum.scalar_vars == scalar);
    CHECK(sum.psd_var_orders == psd_orders);
    CHECK(sum.fcoord == expected_f);
    CHECK(sum.acoord == expected_a);
    CHECK(sum.bcoord == expected_b);
    CHECK(sum.obj_fcoord == expected_objf);
    CHECK(sum.obj_acoord == expected_obja);
  }
}

TEST_CASE("export format names") {
  CHECK(export_format_from_string("sdpa-sparse") == ExportFormat::SdpaSparse);
  CHECK(export_format_from_string("cbf") == ExportFormat::Cbf);
  CHECK_THROWS_AS(export_format_from_string("mps"), ValidationError);
}
