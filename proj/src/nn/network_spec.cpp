#include "peacelens/nn/network_spec.hpp"

#include <charconv>
#include <sstream>

namespace peacelens::nn {

LayerSpec LayerSpec::conv1d(int filters, int kernel_size, Activation activation) {
  LayerSpec l;
  l.kind = LayerKind::Conv1D;
  l.filters = filters;
  l.kernel_size = kernel_size;
  l.activation = activation;
  return l;
}

LayerSpec LayerSpec::max_pool1d(int pool_size) {
  LayerSpec l;
  l.kind = LayerKind::MaxPool1D;
  l.pool_size = pool_size;
  return l;
}

LayerSpec LayerSpec::flatten() { return LayerSpec{}; }

LayerSpec LayerSpec::dense(int units, Activation activation) {
  LayerSpec l;
  l.kind = LayerKind::Dense;
  l.units = units;
  l.activation = activation;
  return l;
}

LayerSpec LayerSpec::dropout(double rate) {
  LayerSpec l;
  l.kind = LayerKind::Dropout;
  l.rate = rate;
  return l;
}

LayerSpec LayerSpec::activation_only(Activation activation) {
  LayerSpec l;
  l.kind = LayerKind::Activation;
  l.activation = activation;
  return l;
}

NetworkSpec instantiate_architecture(Architecture id, int input_length) {
  using A = Activation;
  NetworkSpec spec;
  spec.architecture = id;
  spec.input_length = input_length;
  switch (id) {
    case Architecture::CNN:
      spec.sequence_input = true;
      spec.layers = {LayerSpec::conv1d(64, 3, A::ReLU),
                     LayerSpec::conv1d(32, 3, A::ReLU),
                     LayerSpec::flatten(),
                     LayerSpec::dense(128, A::ReLU),
                     LayerSpec::dropout(0.3),
                     LayerSpec::dense(64, A::ReLU),
                     LayerSpec::dropout(0.3),
                     LayerSpec::dense(1, A::Sigmoid)};
      break;
    case Architecture::RevisedCNN:
      spec.sequence_input = true;
      spec.layers = {LayerSpec::conv1d(64, 3, A::ReLU),
                     LayerSpec::max_pool1d(2),
                     LayerSpec::conv1d(32, 3, A::ReLU),
                     LayerSpec::flatten(),
                     LayerSpec::dense(128, A::ReLU),
                     LayerSpec::dropout(0.3),
                     LayerSpec::dense(64, A::ReLU),
                     LayerSpec::dropout(0.3),
                     LayerSpec::dense(1, A::Sigmoid)};
      break;
    case Architecture::FeedForward:
      spec.sequence_input = false;
      spec.layers = {LayerSpec::dense(512, A::ReLU), LayerSpec::dropout(0.3),
                     LayerSpec::dense(256, A::ReLU), LayerSpec::dropout(0.3),
                     LayerSpec::dense(128, A::ReLU), LayerSpec::dropout(0.3),
                     LayerSpec::dense(64, A::ReLU),  LayerSpec::dropout(0.3),
                     LayerSpec::dense(1, A::Sigmoid)};
      break;
    case Architecture::Custom:
      throw SpecError("no canonical layer stack for a custom architecture");
  }
  validate(spec);
  return spec;
}

std::vector<Shape> infer_shapes(const NetworkSpec& spec) {
  if (spec.input_length < 1) throw SpecError("input length must be positive");
  if (spec.layers.empty()) throw SpecError("network has no layers");

  std::vector<Shape> shapes;
  shapes.reserve(spec.layers.size() + 1);
  Shape s = spec.input_shape();
  shapes.push_back(s);

  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    const LayerSpec& l = spec.layers[i];
    const std::string at = "layer " + std::to_string(i) + " (" +
                           std::string(to_string(l.kind)) + "): ";
    switch (l.kind) {
      case LayerKind::Conv1D:
        if (!s.sequence) throw SpecError(at + "expects a sequence input");
        if (l.filters < 1 || l.kernel_size < 1)
          throw SpecError(at + "filters and kernel size must be positive");
        if (l.kernel_size > s.length)
          throw SpecError(at + "kernel size " + std::to_string(l.kernel_size) +
                          " exceeds sequence length " + std::to_string(s.length));
        s = {s.length - l.kernel_size + 1, l.filters, true};
        break;
      case LayerKind::MaxPool1D:
        if (!s.sequence) throw SpecError(at + "expects a sequence input");
        if (l.pool_size < 1) throw SpecError(at + "pool size must be >= 1");
        if (s.length / l.pool_size < 1)
          throw SpecError(at + "pool size exceeds sequence length");
        s = {s.length / l.pool_size, s.channels, true};
        break;
      case LayerKind::Flatten:
        s = {s.size(), 1, false};
        break;
      case LayerKind::Dense:
        if (s.sequence) throw SpecError(at + "expects a flat input; add Flatten");
        if (l.units < 1) throw SpecError(at + "units must be positive");
        s = {l.units, 1, false};
        break;
      case LayerKind::Dropout:
        if (!(l.rate >= 0.0 && l.rate < 1.0))
          throw SpecError(at + "dropout rate must lie in [0, 1)");
        break;
      case LayerKind::Activation:
        break;
    }
    shapes.push_back(s);
  }

  const LayerSpec& last = spec.layers.back();
  if (last.kind != LayerKind::Dense || last.units != 1 ||
      last.activation != Activation::Sigmoid)
    throw SpecError("final layer must be Dense(1, Sigmoid)");
  return shapes;
}

std::string_view to_string(Architecture a) {
  switch (a) {
    case Architecture::CNN: return "CNN";
    case Architecture::FeedForward: return "FeedForward";
    case Architecture::RevisedCNN: return "RevisedCNN";
    case Architecture::Custom: return "Custom";
  }
  return "?";
}

std::string_view to_string(LayerKind k) {
  switch (k) {
    case LayerKind::Conv1D: return "Conv1D";
    case LayerKind::MaxPool1D: return "MaxPool1D";
    case LayerKind::Flatten: return "Flatten";
    case LayerKind::Dense: return "Dense";
    case LayerKind::Dropout: return "Dropout";
    case LayerKind::Activation: return "Activation";
  }
  return "?";
}

std::string_view to_string(Activation a) {
  switch (a) {
    case Activation::None: return "none";
    case Activation::ReLU: return "relu";
    case Activation::Sigmoid: return "sigmoid";
  }
  return "?";
}

Architecture parse_architecture(std::string_view name) {
  for (auto a : {Architecture::CNN, Architecture::FeedForward,
                 Architecture::RevisedCNN, Architecture::Custom})
    if (name == to_string(a)) return a;
  if (name == "cnn") return Architecture::CNN;
  if (name == "feedforward" || name == "ff") return Architecture::FeedForward;
  if (name == "revised-cnn" || name == "revisedcnn") return Architecture::RevisedCNN;
  throw SpecError("unknown architecture '" + std::string(name) + "'");
}

Activation parse_activation(std::string_view name) {
  for (auto a : {Activation::None, Activation::ReLU, Activation::Sigmoid})
    if (name == to_string(a)) return a;
  throw SpecError("unknown activation '" + std::string(name) + "'");
}

LayerKind parse_layer_kind(std::string_view name) {
  for (auto k : {LayerKind::Conv1D, LayerKind::MaxPool1D, LayerKind::Flatten,
                 LayerKind::Dense, LayerKind::Dropout, LayerKind::Activation})
    if (name == to_string(k)) return k;
  throw SpecError("unknown layer kind '" + std::string(name) + "'");
}

std::string describe(const LayerSpec& l) {
  std::ostringstream os;
  os << to_string(l.kind);
  switch (l.kind) {
    case LayerKind::Conv1D:
      os << " filters=" << l.filters << " kernel=" << l.kernel_size
         << " activation=" << to_string(l.activation);
      break;
    case LayerKind::MaxPool1D:
      os << " pool=" << l.pool_size;
      break;
    case LayerKind::Dense:
      os << " units=" << l.units << " activation=" << to_string(l.activation);
      break;
    case LayerKind::Dropout:
      // round-trips exactly through strtod
      os.precision(17);
      os << " rate=" << l.rate;
      break;
    case LayerKind::Activation:
      os << " activation=" << to_string(l.activation);
      break;
    case LayerKind::Flatten:
      break;
  }
  return os.str();
}

namespace {

int to_int(std::string_view v) {
  int out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || p != v.data() + v.size())
    throw SpecError("bad integer '" + std::string(v) + "'");
  return out;
}

}  // namespace

LayerSpec parse_layer(std::string_view line) {
  std::istringstream is{std::string(line)};
  std::string kind;
  is >> kind;
  LayerSpec l;
  l.kind = parse_layer_kind(kind);
  std::string tok;
  while (is >> tok) {
    auto eq = tok.find('=');
    if (eq == std::string::npos) throw SpecError("bad layer token '" + tok + "'");
    std::string_view key(tok.data(), eq);
    std::string_view val(tok.data() + eq + 1, tok.size() - eq - 1);
    if (key == "filters") l.filters = to_int(val);
    else if (key == "kernel") l.kernel_size = to_int(val);
    else if (key == "pool") l.pool_size = to_int(val);
    else if (key == "units") l.units = to_int(val);
    else if (key == "rate") l.rate = std::stod(std::string(val));
    else if (key == "activation") l.activation = parse_activation(val);
    else throw SpecError("unknown layer attribute '" + std::string(key) + "'");
  }
  return l;
}

}  // namespace peacelens::nn
