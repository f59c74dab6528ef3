#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "support.hpp"

using namespace plg;
using namespace plg::testing;

namespace {

std::string problems_dir() { return PLG_PROBLEMS_DIR; }

void expect_input_error(const std::string& text, const std::string& fragment) {
  try {
    parse_problem(text, "p.yaml");
    ADD_FAILURE() << "no error for:\n" << text;
  } catch (const InputError& e) {
    EXPECT_NE(std::string(e.what()).find(fragment), std::string::npos) << e.what();
  }
}

}  // namespace

TEST(Io, DoubleRoundTripIsExact) {
  Rng rng(1);
  for (int t = 0; t < 10000; ++t) {
    const double v = std::ldexp(uniform(rng, -1, 1), static_cast<int>(rng() % 200) - 100);
    EXPECT_EQ(parse_double(format_double(v), "x"), v);
  }
  EXPECT_EQ(parse_double(format_double(std::numeric_limits<double>::denorm_min()), "x"), std::numeric_limits<double>::denorm_min());
  EXPECT_THROW(parse_double("1.5x", "x"), InputError);
  EXPECT_THROW(parse_long("7.0", "x"), InputError);
}

TEST(Io, FieldCsvRoundTripIsBitIdentical) {
  Rng rng(2);
  const auto dom = random_mask(rng, 7, 5, 0.1);
  const auto u = random_scalar(rng, dom, 1e3);
  const auto b = random_vector(rng, dom, 1e-3);
  const auto su = scalar_csv(u, dom.h());
  const auto lu = parse_scalar_csv(su);
  EXPECT_EQ(lu.field.values(), u.values());
  EXPECT_EQ(lu.h, dom.h());
  EXPECT_EQ(scalar_csv(lu.field, lu.h), su);
  const auto lb = parse_vector_csv(vector_csv(b, dom.h()));
  for (std::size_t k = 0; k < b.size(); ++k) EXPECT_EQ(lb.field[k], b[k]);
  const auto t = random_faces(rng, dom);
  EXPECT_EQ(parse_faces_csv(faces_csv(dom, t), dom), t);
}

TEST(Io, CsvErrorsAreLineAnchored) {
  try {
    parse_scalar_csv("nx,ny,h\n2,1,0.5\ni,j,value\n0,0,1\n1,0,abc\n", "u.csv");
    FAIL();
  } catch (const InputError& e) {
    EXPECT_NE(std::string(e.what()).find("u.csv:5"), std::string::npos) << e.what();
  }
  EXPECT_THROW(parse_scalar_csv("nx,ny,h\n2,1,0.5\ni,j,value\n0,0,1\n"), InputError);
  EXPECT_THROW(parse_vector_csv("nx,ny,h\n1,1,0.5\ni,j,value\n0,0,1\n"), InputError);
}

TEST(Io, ParsesSampleProblems) {
  for (const char* name : {"zero", "calibration_ramp", "heisenberg", "step_contact", "rectangle", "spike", "divergent",
                           "tiny_dirichlet"}) {
    SCOPED_TRACE(name);
    EXPECT_NO_THROW(load_problem(problems_dir() + "/" + name + ".yaml"));
  }
  const auto spike = load_problem(problems_dir() + "/spike.yaml");
  EXPECT_EQ(spike.spec.dom.cell_count(), 41u);
  EXPECT_TRUE(spike.spec.dom.in_mask(4, 5));  // top row listed first
  EXPECT_FALSE(spike.spec.dom.in_mask(3, 5));
  const auto ramp = load_problem(problems_dir() + "/calibration_ramp.yaml");
  EXPECT_TRUE(ramp.spec.dirichlet());
  EXPECT_NEAR(energy_primal(ramp.spec, [&] {
                ScalarField u = ramp.spec.dom.scalar();
                for (const auto& c : ramp.spec.dom.cells()) u(c.i, c.j) = ramp.spec.dom.center(c).x;
                return u;
              }()),
              1.0, 1e-12);
  EXPECT_EQ(ramp.solver.tol_gap, 1e-6);
}

TEST(Io, ExplicitFields) {
  const auto pf = parse_problem(R"(
grid: {nx: 2, ny: 2, h: 0.5}
norm:
  kind: riemannian
  a: [[1, 2], [3, 4]]
  sigma0: [[2, 0.5], [0.5, 1]]
drift:
  rows:
    - [[0, 1], [2, 3]]
    - [[4, 5], [6, 7]]
source: 1.5
bc:
  kind: dirichlet
  f: [1, 2, 3, 4, 5, 6, 7, 8]
solver: {theta: 0.5, max_iter: 10, gap_check_stride: 5}
tolerances: {gap: 1.0e-3, gap_aware: false}
)");
  const auto& s = pf.spec;
  // rows are listed top first
  EXPECT_EQ(s.norm.weight()(0, 1), 1.0);
  EXPECT_EQ(s.norm.weight()(1, 0), 4.0);
  EXPECT_EQ(s.norm.metric()(0, 0), (Sym2{2, 0.5, 1}));
  EXPECT_EQ(s.drift(0, 1), (Vec2{0, 1}));
  EXPECT_EQ(s.drift(1, 0), (Vec2{6, 7}));
  EXPECT_EQ(s.source(1, 1), 1.5);
  EXPECT_EQ(s.bc.f.size(), 8u);
  EXPECT_EQ(s.bc.f[7], 8.0);
  EXPECT_EQ(pf.solver.theta, 0.5);
  EXPECT_EQ(pf.solver.max_iter, 10);
  EXPECT_EQ(pf.tolerances.gap, 1e-3);
  EXPECT_FALSE(pf.tolerances.gap_aware);
}

TEST(Io, RejectsMalformedProblems) {
  expect_input_error("grid: {nx: 2, ny: 2, h: 0.5}\nnorm: {kind: euclidean}\ncolour: red\n", "p.yaml:3");
  expect_input_error("grid: {nx: 2, ny: 2, h: 0.5}\nnorm: {kind: octagonal}\n", "unknown norm kind");
  expect_input_error("grid: {nx: 2, ny: 2, h: 0.5}\n", "norm");
  expect_input_error("grid: {nx: 2, ny: 2, h: 0.5}\nnorm: {kind: euclidean}\nsource: [[1, 2]]\n", "p.yaml:3");
  expect_input_error("grid: {nx: 2, ny: 2, h: 0.5}\nnorm: {kind: euclidean}\nbc: {kind: dirichlet, f: [1, 2]}\n", "8");
  expect_input_error("grid: {nx: 2, ny: 2, h: 0.5}\nnorm: {kind: euclidean}\nbc: {kind: dirichlet, preset: wave}\n", "wave");
  expect_input_error("grid:\n  nx: 2\n  ny: 2\n  h: 0.5\n  mask: ['10', '01']\nnorm: {kind: euclidean}\n", "4-connected");
  expect_input_error("grid: {nx: 2, ny: 2, h: 0.5}\nnorm: {kind: riemannian, sigma0: [[1, 1], [1, 1]]}\n", "p.yaml:2");
  expect_input_error("grid: {nx: 2, ny: 2, h: 0.5}\nnorm: {kind: euclidean}\nsolver: {tau: 1, sigma: 1}\n",
                     "tau*sigma*L^2 <= 1");
  expect_input_error("grid: {nx: 2, ny: 2, h: 0.5\n", "p.yaml:");
}

TEST(Io, DirichletPresets) {
  const auto dom = GridDomain::rectangle(4, 2, 0.25);
  const auto ramp = dirichlet_preset(dom, "ramp");
  const auto step = dirichlet_preset(dom, "step");
  const auto& faces = dom.boundary_faces();
  for (std::size_t k = 0; k < faces.size(); ++k) {
    const double x = dom.face_midpoint(faces[k]).x;
    EXPECT_DOUBLE_EQ(ramp[k], x);
    EXPECT_EQ(step[k], x < 0.5 ? 0.0 : 1.0);
  }
  for (double v : dirichlet_preset(dom, "zero")) EXPECT_EQ(v, 0.0);
  EXPECT_THROW(dirichlet_preset(dom, "nope"), InputError);
}

TEST(Io, CertificateJsonIsFlat) {
  Certificate c;
  c.dual = -std::numeric_limits<double>::infinity();
  c.failures = {"gap", "div_residual"};
  const auto j = certificate_json(c);
  for (const auto& [k, v] : j.items()) EXPECT_FALSE(v.is_object() || v.is_array()) << k;
  EXPECT_EQ(j["dual"], "-inf");
  EXPECT_EQ(j["failed"], "gap,div_residual");
}
