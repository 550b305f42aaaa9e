#include "mn/metrics.hpp"
#include "mn/network.hpp"

#include "support.hpp"

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <functional>
#include <map>

namespace {

using namespace mn;

nlohmann::json raw(const std::string& name) {
  std::ifstream in(test::fixture(name));
  return nlohmann::json::parse(in);
}

const std::vector<std::string> kTrained{"sphere_d2_w16.json", "sphere_d3_w32.json", "two_spheres_d3_w32.json",
                                        "circle2d_d2_w16.json"};

TEST(Fixtures, AllLoadAndCarryGeneratorMetadata) {
  int count = 0;
  for (const auto& entry : std::filesystem::directory_iterator(MN_FIXTURE_DIR)) {
    if (entry.path().extension() != ".json") continue;
    ++count;
    const std::string name = entry.path().filename().string();
    EXPECT_NO_THROW(load_network(entry.path())) << name;
    const auto j = raw(name);
    ASSERT_TRUE(j.contains("metadata")) << name;
    const auto kind = j["metadata"]["generator"]["kind"].get<std::string>();
    EXPECT_TRUE(kind == "handcrafted" || kind == "trained") << name;
  }
  EXPECT_EQ(count, 10);
}

TEST(Fixtures, HandcraftedClosedForms) {
  const std::map<std::string, std::function<double(const VecX&)>> forms{
      {"octahedron.json", [](const VecX& p) { return p.cwiseAbs().sum() - 0.5; }},
      {"box.json", [](const VecX& p) { return p.cwiseAbs().maxCoeff() - 0.4; }},
      {"diamond2d.json", [](const VecX& p) { return p.cwiseAbs().sum() - 0.5; }},
      {"halfspace_z.json", [](const VecX& p) { return p[2]; }},
      {"identity-2d.json", [](const VecX& p) { return p.sum(); }},
      {"const_pos.json", [](const VecX&) { return 1.0; }},
  };
  std::mt19937_64 rng(21);
  for (const auto& [name, f] : forms) {
    const Network net = test::load_fixture(name);
    for (int i = 0; i < 10000; ++i) {
      const VecX p = test::uniform_in(net.domain, rng);
      ASSERT_NEAR(eval(net, p), f(p), 1e-15) << name;
    }
  }
}

TEST(Fixtures, TrainedArchitectureMatchesMetadata) {
  for (const auto& name : kTrained) {
    const Network net = test::load_fixture(name);
    const auto gen = raw(name)["metadata"]["generator"];
    EXPECT_EQ(gen["kind"], "trained");
    EXPECT_EQ(net.depth(), gen["depth"].get<int>() + 1) << name;
    for (int l = 0; l + 1 < net.depth(); ++l)
      EXPECT_EQ(net.layers[static_cast<std::size_t>(l)].outputs(), gen["width"].get<int>()) << name;
  }
}

TEST(Fixtures, TrainedSurfacesFitTheirShapes) {
  for (const auto& name : kTrained) {
    const Network net = test::load_fixture(name);
    const auto shape = shape_from_metadata(raw(name));
    ASSERT_TRUE(shape) << name;
    EXPECT_EQ(shape->dim(), net.input_dim) << name;
    double s = 0.0;
    const auto pts = sample_shape(*shape, 10000, 5);
    for (const auto& p : pts) s += std::abs(eval(net, p.head(net.input_dim)));
    EXPECT_LE(s / static_cast<double>(pts.size()), 5e-3) << name;
  }
}

TEST(Fixtures, TrainedSignConvention) {
  // Negative inside, positive outside.
  for (const auto& name : kTrained) {
    const Network net = test::load_fixture(name);
    VecX far = VecX::Constant(net.input_dim, 0.95);
    EXPECT_GT(eval(net, far), 0.0) << name;
  }
  EXPECT_LT(eval(test::load_fixture("sphere_d3_w32.json"), Vec3::Zero()), 0.0);
  EXPECT_LT(eval(test::load_fixture("two_spheres_d3_w32.json"), Vec3(0.45, 0, 0)), 0.0);
  EXPECT_LT(eval(test::load_fixture("two_spheres_d3_w32.json"), Vec3(-0.45, 0, 0)), 0.0);
}

}  // namespace
