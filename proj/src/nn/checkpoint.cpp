#include "peacelens/nn/checkpoint.hpp"

#include <charconv>
#include <map>
#include <sstream>

#include "peacelens/util/bytes.hpp"

namespace peacelens::nn {

namespace {

constexpr std::string_view kMagic = "PLNS";

using Kind = CheckpointError::Kind;

template <typename Scalar>
constexpr std::string_view precision_name() {
  return sizeof(Scalar) == 4 ? "float32" : "float64";
}

std::string slot_line(std::size_t layer, const ParamSlot& s) {
  std::ostringstream os;
  os << "layer=" << layer << " kernel=" << s.kernel_rows << "x" << s.kernel_cols
     << " bias=" << s.bias_size;
  return os.str();
}

std::uint64_t to_u64(const std::string& v, const char* what) {
  std::uint64_t out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || p != v.data() + v.size())
    throw CheckpointError(Kind::Corrupt, std::string("bad ") + what + " in header");
  return out;
}

}  // namespace

template <typename Scalar>
std::string serialize_checkpoint(const NetworkSpec& spec, const ModelWeights<Scalar>& weights,
                                 std::uint64_t seed) {
  if (!weights.matches(spec))
    throw CheckpointError(Kind::ShapeMismatch, "weights do not match the network spec");

  std::ostringstream header;
  header << "architecture=" << to_string(spec.architecture) << "\n"
         << "input_length=" << spec.input_length << "\n"
         << "input_kind=" << (spec.sequence_input ? "sequence" : "flat") << "\n"
         << "precision=" << precision_name<Scalar>() << "\n"
         << "seed=" << seed << "\n"
         << "layer_count=" << spec.layers.size() << "\n";
  for (std::size_t i = 0; i < spec.layers.size(); ++i)
    header << "layer." << i << "=" << describe(spec.layers[i]) << "\n";
  std::size_t n_slots = 0;
  for (std::size_t i = 0; i < weights.layout().size(); ++i) {
    const ParamSlot& s = weights.layout()[i];
    if (!s.present) continue;
    header << "param." << n_slots++ << "=" << slot_line(i, s) << "\n";
  }
  header << "param_slots=" << n_slots << "\n"
         << "param_count=" << weights.size() << "\n";
  const std::string text = header.str();

  std::string out(kMagic);
  util::put_le<std::uint16_t>(out, kCheckpointVersion);
  util::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(text.size()));
  out += text;
  out.reserve(out.size() + static_cast<std::size_t>(weights.size()) * sizeof(Scalar));
  for (Eigen::Index i = 0; i < weights.size(); ++i) util::put_le<Scalar>(out, weights.flat()(i));
  return out;
}

Checkpoint deserialize_checkpoint(const std::string& bytes) {
  util::ByteReader r(bytes);
  if (!r.can_read(kMagic.size()) || r.take(kMagic.size()) != kMagic)
    throw CheckpointError(Kind::Corrupt, "missing PLNS magic");
  if (!r.can_read(6)) throw CheckpointError(Kind::Corrupt, "truncated checkpoint header");
  const auto version = r.get<std::uint16_t>();
  if (version == 0) throw CheckpointError(Kind::Corrupt, "invalid checkpoint version 0");
  if (version > kCheckpointVersion)
    throw CheckpointError(Kind::UnsupportedVersion,
                          "checkpoint version " + std::to_string(version) +
                              " is newer than supported version " +
                              std::to_string(kCheckpointVersion));
  const auto header_len = r.get<std::uint32_t>();
  if (!r.can_read(header_len))
    throw CheckpointError(Kind::Corrupt, "truncated checkpoint header");
  const std::string header(r.take(header_len));

  std::map<std::string, std::string> kv;
  std::istringstream hs(header);
  for (std::string line; std::getline(hs, line);) {
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw CheckpointError(Kind::Corrupt, "malformed header line '" + line + "'");
    kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  auto need = [&](const std::string& key) -> const std::string& {
    auto it = kv.find(key);
    if (it == kv.end()) throw CheckpointError(Kind::Corrupt, "header missing '" + key + "'");
    return it->second;
  };

  Checkpoint ck;
  NetworkSpec& spec = ck.spec;
  try {
    spec.architecture = parse_architecture(need("architecture"));
    spec.input_length = static_cast<int>(to_u64(need("input_length"), "input_length"));
    const std::string& kind = need("input_kind");
    if (kind != "sequence" && kind != "flat")
      throw CheckpointError(Kind::Corrupt, "bad input_kind");
    spec.sequence_input = kind == "sequence";
    const auto n_layers = to_u64(need("layer_count"), "layer_count");
    for (std::uint64_t i = 0; i < n_layers; ++i)
      spec.layers.push_back(parse_layer(need("layer." + std::to_string(i))));
    validate(spec);
  } catch (const SpecError& e) {
    throw CheckpointError(Kind::Corrupt, std::string("invalid embedded spec: ") + e.what());
  }
  if (spec.architecture != Architecture::Custom &&
      !(instantiate_architecture(spec.architecture, spec.input_length) == spec))
    throw CheckpointError(Kind::ShapeMismatch,
                          "layer list differs from the canonical " +
                              std::string(to_string(spec.architecture)) + " stack");
  ck.seed = to_u64(need("seed"), "seed");

  Eigen::Index total = 0;
  const auto layout = param_layout(spec, &total);
  std::size_t slot = 0;
  for (std::size_t i = 0; i < layout.size(); ++i) {
    if (!layout[i].present) continue;
    const std::string key = "param." + std::to_string(slot++);
    if (need(key) != slot_line(i, layout[i]))
      throw CheckpointError(Kind::ShapeMismatch,
                            key + " '" + need(key) + "' disagrees with the network spec ('" +
                                slot_line(i, layout[i]) + "')");
  }
  if (to_u64(need("param_slots"), "param_slots") != slot ||
      to_u64(need("param_count"), "param_count") != static_cast<std::uint64_t>(total))
    throw CheckpointError(Kind::ShapeMismatch, "parameter count disagrees with the network spec");

  auto read_params = [&](auto tag) {
    using Scalar = decltype(tag);
    const std::size_t need_bytes = static_cast<std::size_t>(total) * sizeof(Scalar);
    if (r.remaining() < need_bytes)
      throw CheckpointError(Kind::Corrupt, "truncated parameter payload");
    if (r.remaining() > need_bytes)
      throw CheckpointError(Kind::Corrupt, "trailing bytes after parameter payload");
    Vector<Scalar> flat(total);
    for (Eigen::Index i = 0; i < total; ++i) flat(i) = r.get<Scalar>();
    ModelWeights<Scalar> w;
    w.assign(layout, std::move(flat));
    return w;
  };
  const std::string& precision = need("precision");
  if (precision == "float32") ck.weights = read_params(float{});
  else if (precision == "float64") ck.weights = read_params(double{});
  else throw CheckpointError(Kind::Corrupt, "unknown precision '" + precision + "'");
  return ck;
}

template <typename Scalar>
void save_checkpoint(const NetworkSpec& spec, const ModelWeights<Scalar>& weights,
                     std::uint64_t seed, const std::filesystem::path& path) {
  const auto bytes = serialize_checkpoint(spec, weights, seed);
  try {
    util::write_file_atomic(path, bytes);
  } catch (const std::exception& e) {
    throw CheckpointError(Kind::Io, e.what());
  }
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::string bytes;
  try {
    bytes = util::read_file(path);
  } catch (const std::exception& e) {
    throw CheckpointError(Kind::Io, e.what());
  }
  return deserialize_checkpoint(bytes);
}

template std::string serialize_checkpoint<float>(const NetworkSpec&, const ModelWeights<float>&,
                                                 std::uint64_t);
template std::string serialize_checkpoint<double>(const NetworkSpec&,
                                                  const ModelWeights<double>&, std::uint64_t);
template void save_checkpoint<float>(const NetworkSpec&, const ModelWeights<float>&,
                                     std::uint64_t, const std::filesystem::path&);
template void save_checkpoint<double>(const NetworkSpec&, const ModelWeights<double>&,
                                      std::uint64_t, const std::filesystem::path&);

}  // namespace peacelens::nn
