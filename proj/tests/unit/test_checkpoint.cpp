#include "doctest.h"

#include <cstring>
#include <filesystem>

#include "peacelens/nn/checkpoint.hpp"
#include "peacelens/util/bytes.hpp"

using namespace peacelens::nn;
namespace fs = std::filesystem;

namespace {

fs::path temp_path(const std::string& name) {
  return fs::temp_directory_path() / ("peacelens_ck_" + name);
}

}  // namespace

TEST_CASE("checkpoint round-trip is bit exact for both precisions") {
  const auto spec = instantiate_architecture(Architecture::RevisedCNN, 24);
  std::mt19937_64 rng(3);
  const auto wd = glorot_init<double>(spec, rng);
  const auto wf = glorot_init<float>(spec, rng);

  const auto pd = temp_path("d.plns");
  save_checkpoint(spec, wd, 77, pd);
  const auto ld = load_checkpoint(pd);
  CHECK(ld.spec == spec);
  CHECK(ld.seed == 77);
  REQUIRE(ld.precision() == Precision::Float64);
  const auto& back_d = std::get<ModelWeights<double>>(ld.weights);
  CHECK(std::memcmp(back_d.flat().data(), wd.flat().data(),
                    sizeof(double) * static_cast<std::size_t>(wd.size())) == 0);

  const auto pf = temp_path("f.plns");
  save_checkpoint(spec, wf, 78, pf);
  const auto lf = load_checkpoint(pf);
  REQUIRE(lf.precision() == Precision::Float32);
  CHECK(std::get<ModelWeights<float>>(lf.weights).flat() == wf.flat());

  // re-serialising the loaded checkpoint reproduces the file
  CHECK(serialize_checkpoint(lf.spec, std::get<ModelWeights<float>>(lf.weights), lf.seed) ==
        peacelens::util::read_file(pf));
}

TEST_CASE("file begins with magic, version and a readable header") {
  const auto spec = instantiate_architecture(Architecture::FeedForward, 8);
  ModelWeights<float> w(spec);
  const auto bytes = serialize_checkpoint(spec, w, 5);
  CHECK(bytes.substr(0, 4) == "PLNS");
  CHECK(static_cast<unsigned char>(bytes[4]) == 1);
  CHECK(static_cast<unsigned char>(bytes[5]) == 0);
  CHECK(bytes.find("architecture=FeedForward\n") != std::string::npos);
  CHECK(bytes.find("precision=float32\n") != std::string::npos);
  CHECK(bytes.find("seed=5\n") != std::string::npos);
  CHECK(bytes.find("layer.0=Dense units=512 activation=relu\n") != std::string::npos);
}

TEST_CASE("damaged checkpoints are reported by kind") {
  const auto spec = instantiate_architecture(Architecture::CNN, 10);
  std::mt19937_64 rng(1);
  const auto bytes = serialize_checkpoint(spec, glorot_init<double>(spec, rng), 1);

  auto kind_of = [](const std::string& b) {
    try {
      deserialize_checkpoint(b);
    } catch (const CheckpointError& e) {
      return e.kind();
    }
    FAIL("no error");
    return CheckpointError::Kind::Io;
  };

  CHECK(kind_of(bytes.substr(0, bytes.size() - 3)) == CheckpointError::Kind::Corrupt);
  CHECK(kind_of(bytes.substr(0, 20)) == CheckpointError::Kind::Corrupt);
  CHECK(kind_of(bytes + "x") == CheckpointError::Kind::Corrupt);
  CHECK(kind_of("XXXX" + bytes.substr(4)) == CheckpointError::Kind::Corrupt);

  auto bumped = bytes;
  bumped[4] = static_cast<char>(kCheckpointVersion + 1);
  CHECK(kind_of(bumped) == CheckpointError::Kind::UnsupportedVersion);

  // header claims a different layer width than the stored parameter slots
  auto reshaped = bytes;
  const auto pos = reshaped.find("filters=64");
  REQUIRE(pos != std::string::npos);
  reshaped.replace(pos, 10, "filters=65");
  CHECK(kind_of(reshaped) == CheckpointError::Kind::ShapeMismatch);

  CHECK_THROWS_AS(load_checkpoint(temp_path("missing.plns")), CheckpointError);
}

TEST_CASE("custom stacks round-trip") {
  NetworkSpec s;
  s.input_length = 6;
  s.sequence_input = true;
  s.layers = {LayerSpec::conv1d(2, 2, Activation::Sigmoid), LayerSpec::max_pool1d(3),
              LayerSpec::flatten(), LayerSpec::dropout(0.125),
              LayerSpec::dense(1, Activation::Sigmoid)};
  std::mt19937_64 rng(2);
  const auto w = glorot_init<double>(s, rng);
  const auto ck = deserialize_checkpoint(serialize_checkpoint(s, w, 9));
  CHECK(ck.spec == s);
  CHECK(std::get<ModelWeights<double>>(ck.weights).flat() == w.flat());
}
