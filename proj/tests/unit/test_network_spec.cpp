#include "doctest.h"

#include "peacelens/nn/network_spec.hpp"

using namespace peacelens::nn;

TEST_CASE("canonical CNN starts with 64 filters of width 3") {
  const auto spec = instantiate_architecture(Architecture::CNN);
  REQUIRE(spec.layers.size() == 8);
  CHECK(spec.layers[0] == LayerSpec::conv1d(64, 3, Activation::ReLU));
  CHECK(spec.layers[1] == LayerSpec::conv1d(32, 3, Activation::ReLU));
  CHECK(spec.layers[2].kind == LayerKind::Flatten);
  CHECK(spec.layers[3] == LayerSpec::dense(128, Activation::ReLU));
  CHECK(spec.layers[4] == LayerSpec::dropout(0.3));
  CHECK(spec.layers[5] == LayerSpec::dense(64, Activation::ReLU));
  CHECK(spec.layers[7] == LayerSpec::dense(1, Activation::Sigmoid));
  CHECK(spec.sequence_input);
}

TEST_CASE("feed-forward dense widths are 512, 256, 128, 64 then the output") {
  const auto spec = instantiate_architecture(Architecture::FeedForward);
  std::vector<int> units;
  int dropouts = 0;
  for (const auto& l : spec.layers) {
    if (l.kind == LayerKind::Dense) units.push_back(l.units);
    if (l.kind == LayerKind::Dropout) {
      ++dropouts;
      CHECK(l.rate == doctest::Approx(0.3));
    }
  }
  CHECK(units == std::vector<int>{512, 256, 128, 64, 1});
  CHECK(dropouts == 4);
  CHECK_FALSE(spec.sequence_input);
}

TEST_CASE("revised CNN has exactly one pool of size 2 between the convolutions") {
  const auto spec = instantiate_architecture(Architecture::RevisedCNN);
  int pools = 0;
  for (const auto& l : spec.layers)
    if (l.kind == LayerKind::MaxPool1D) {
      ++pools;
      CHECK(l.pool_size == 2);
    }
  CHECK(pools == 1);
  CHECK(spec.layers[0].kind == LayerKind::Conv1D);
  CHECK(spec.layers[1].kind == LayerKind::MaxPool1D);
  CHECK(spec.layers[2].kind == LayerKind::Conv1D);
}

TEST_CASE("shape algebra over length-1536 input ends in a scalar") {
  const auto cnn = infer_shapes(instantiate_architecture(Architecture::CNN));
  CHECK(cnn[1] == Shape{1534, 64, true});
  CHECK(cnn[2] == Shape{1532, 32, true});
  CHECK(cnn[3] == Shape{1532 * 32, 1, false});
  CHECK(cnn.back() == Shape{1, 1, false});

  const auto rev = infer_shapes(instantiate_architecture(Architecture::RevisedCNN));
  CHECK(rev[2] == Shape{767, 64, true});  // floor(1534 / 2)
  CHECK(rev[3] == Shape{765, 32, true});
  CHECK(rev.back().size() == 1);

  const auto ff = infer_shapes(instantiate_architecture(Architecture::FeedForward));
  CHECK(ff.back().size() == 1);
}

TEST_CASE("odd sequence lengths floor through the pool") {
  NetworkSpec s;
  s.input_length = 7;
  s.sequence_input = true;
  s.layers = {LayerSpec::max_pool1d(2), LayerSpec::flatten(),
              LayerSpec::dense(1, Activation::Sigmoid)};
  CHECK(infer_shapes(s)[1].length == 3);
}

TEST_CASE("invalid stacks are rejected") {
  NetworkSpec s;
  s.input_length = 4;
  s.sequence_input = true;

  SUBCASE("kernel longer than the sequence") {
    s.layers = {LayerSpec::conv1d(2, 5, Activation::ReLU), LayerSpec::flatten(),
                LayerSpec::dense(1, Activation::Sigmoid)};
    CHECK_THROWS_AS(validate(s), SpecError);
  }
  SUBCASE("dropout rate of 1") {
    s.layers = {LayerSpec::flatten(), LayerSpec::dropout(1.0),
                LayerSpec::dense(1, Activation::Sigmoid)};
    CHECK_THROWS_AS(validate(s), SpecError);
  }
  SUBCASE("final layer is not Dense(1, Sigmoid)") {
    s.layers = {LayerSpec::flatten(), LayerSpec::dense(2, Activation::Sigmoid)};
    CHECK_THROWS_AS(validate(s), SpecError);
  }
  SUBCASE("dense on an unflattened sequence") {
    s.layers = {LayerSpec::dense(1, Activation::Sigmoid)};
    CHECK_THROWS_AS(validate(s), SpecError);
  }
  SUBCASE("pool of zero") {
    s.layers = {LayerSpec::max_pool1d(0), LayerSpec::flatten(),
                LayerSpec::dense(1, Activation::Sigmoid)};
    CHECK_THROWS_AS(validate(s), SpecError);
  }
}

TEST_CASE("custom architecture has no canonical stack") {
  CHECK_THROWS_AS(instantiate_architecture(Architecture::Custom), SpecError);
  CHECK_THROWS_AS(parse_architecture("Transformer"), SpecError);
}

TEST_CASE("layer descriptions parse back to the same layer") {
  for (auto arch : {Architecture::CNN, Architecture::FeedForward, Architecture::RevisedCNN})
    for (const auto& l : instantiate_architecture(arch).layers)
      CHECK(parse_layer(describe(l)) == l);
}
