#include <catch_amalgamated.hpp>

#include "cwl/io.hpp"
#include "cwl/mesh.hpp"

using namespace cwl;
using namespace cwl::io;

TEST_CASE("mesh roundtrip") {
  MeshOptions o;
  o.h = 0.3;
  TriMesh m = mesh_polygon(Polygon::unit_square(), o);
  std::stringstream s;
  write_mesh(s, m);
  TriMesh r = read_mesh(s);
  REQUIRE(r.nodes.size() == m.nodes.size());
  REQUIRE(r.triangles == m.triangles);
  REQUIRE(r.boundary == m.boundary);
  for (std::size_t i = 0; i < m.nodes.size(); ++i) CHECK(r.nodes[i] == m.nodes[i]);
  std::stringstream bad("nodes 3 triangles 1 boundary 0\n0 0\n1 0\n");
  CHECK_THROWS_AS(read_mesh(bad), SchemaError);
  std::stringstream oob("nodes 3 triangles 1 boundary 0\n0 0\n1 0\n0 1\n0 1 7\n");
  CHECK_THROWS_AS(read_mesh(oob), SchemaError);
}

TEST_CASE("far field csv") {
  FarField f;
  f.k = 2.0;
  f.theta = uniform_angles(8);
  for (double t : f.theta) f.values.emplace_back(std::cos(3 * t) / 7.0, std::sin(t) * 1e-9);
  std::stringstream s;
  write_csv(s, far_field_table(f));
  FarField r = read_far_field(s, 2.0);
  REQUIRE(r.values.size() == 8);
  for (std::size_t i = 0; i < 8; ++i) {
    CHECK(r.values[i] == f.values[i]);
    CHECK(r.theta[i] == f.theta[i]);
  }
  std::stringstream wrong("# rows 3\ntheta,re,im\n0,1,0\n1,1,0\n");
  CHECK_THROWS_AS(read_far_field(wrong, 1.0), SchemaError);
  std::stringstream hdr("t,re,im\n0,1,0\n");
  CHECK_THROWS_AS(read_far_field(hdr, 1.0), SchemaError);
}

TEST_CASE("json configs") {
  ConductiveMedium m;
  m.domain = Polygon::make({{0, 0}, {1, 0}, {1, 1}, {0, 1}});
  m.q = cplx(2.0, 0.1);
  m.q_patches.push_back({Polygon::make({{0.2, 0.2}, {0.4, 0.2}, {0.4, 0.4}}), cplx(3.0)});
  m.eta = cplx(1.0, 0.5);
  m.eta_edges[2] = cplx(0.0, 2.0);
  ConductiveMedium r = medium_from_json(json::parse(medium_to_json(m).dump()));
  CHECK(r.q == m.q);
  CHECK(r.eta == m.eta);
  CHECK(r.eta_at(2) == cplx(0.0, 2.0));
  CHECK(r.q_at({0.35, 0.25}) == cplx(3.0));
  CHECK(std::get<Polygon>(r.domain).vertices == std::get<Polygon>(m.domain).vertices);

  ConductiveMedium d = medium_from_json(json::parse(R"({"domain": {"type": "disk", "radius": 1.5}, "q": [4], "eta": {"default": [0, 0.5]}})"));
  CHECK(std::get<Disk>(d.domain).radius == 1.5);
  CHECK(d.eta == cplx(0.0, 0.5));

  CHECK_THROWS_AS(medium_from_json(json::parse(R"({"domain": {"type": "disk", "radius": 1}, "colour": 1})")), SchemaError);
  CHECK_THROWS_AS(medium_from_json(json::parse(R"({"domain": {"type": "hexagon"}})")), SchemaError);
  CHECK_THROWS_AS(medium_from_json(json::parse(R"({"domain": {"type": "disk", "radius": -1}})")), SchemaError);
  CHECK_THROWS_AS(medium_from_json(json::parse(R"({"domain": {"type": "disk", "radius": 1}, "eta": {"edges": [[5, 1, 0]]}})")),
                  SchemaError);

  auto g = FourierKernel::make(1.5, {cplx(1, 2), cplx(0.5), cplx(0, -1)});
  auto gr = kernel_from_json(json::parse(kernel_to_json(g).dump()));
  CHECK(gr.k == 1.5);
  CHECK(gr.coeffs == g.coeffs);
  CHECK_THROWS_AS(kernel_from_json(json::parse(R"({"k": 1, "coeffs": [1, 2]})")), SchemaError);
}

TEST_CASE("artifacts") {
  CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  auto dir = std::filesystem::temp_directory_path() / "cwl_io_test";
  std::filesystem::remove_all(dir);
  ArtifactWriter w(dir);
  w.write("a.txt", "abc");
  w.write_json("b.json", json{{"x", 1}});
  w.finish();
  std::ifstream f(dir / "manifest.json");
  json man = json::parse(f);
  REQUIRE(man["artifacts"].size() == 2);
  CHECK(man["artifacts"][0]["path"] == "a.txt");
  CHECK(man["artifacts"][0]["sha256"] == sha256_hex("abc"));
  CHECK(man["artifacts"][0]["bytes"] == 3);
  std::ifstream b(dir / "b.json");
  std::string content((std::istreambuf_iterator<char>(b)), {});
  CHECK(man["artifacts"][1]["sha256"] == sha256_hex(content));
  std::filesystem::remove_all(dir);
}
