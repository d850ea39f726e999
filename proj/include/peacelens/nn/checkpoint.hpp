#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <variant>

#include "peacelens/nn/network_spec.hpp"
#include "peacelens/nn/weights.hpp"

namespace peacelens::nn {

// Layout: "PLNS" | u16 version | u32 header length | UTF-8 key=value header
// | parameters as little-endian IEEE-754 in flat (header-declared) order.
inline constexpr std::uint16_t kCheckpointVersion = 1;

enum class Precision { Float32, Float64 };

class CheckpointError : public std::runtime_error {
 public:
  enum class Kind { Io, Corrupt, UnsupportedVersion, ShapeMismatch };
  CheckpointError(Kind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

struct Checkpoint {
  NetworkSpec spec;
  std::uint64_t seed = 0;
  std::variant<ModelWeights<float>, ModelWeights<double>> weights;

  Precision precision() const {
    return std::holds_alternative<ModelWeights<float>>(weights) ? Precision::Float32
                                                                : Precision::Float64;
  }
};

template <typename Scalar>
std::string serialize_checkpoint(const NetworkSpec& spec, const ModelWeights<Scalar>& weights,
                                 std::uint64_t seed);
Checkpoint deserialize_checkpoint(const std::string& bytes);

template <typename Scalar>
void save_checkpoint(const NetworkSpec& spec, const ModelWeights<Scalar>& weights,
                     std::uint64_t seed, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

extern template std::string serialize_checkpoint<float>(const NetworkSpec&,
                                                        const ModelWeights<float>&,
                                                        std::uint64_t);
extern template std::string serialize_checkpoint<double>(const NetworkSpec&,
                                                         const ModelWeights<double>&,
                                                         std::uint64_t);
extern template void save_checkpoint<float>(const NetworkSpec&, const ModelWeights<float>&,
                                            std::uint64_t, const std::filesystem::path&);
extern template void save_checkpoint<double>(const NetworkSpec&,
                                             const ModelWeights<double>&, std::uint64_t,
                                             const std::filesystem::path&);

}  // namespace peacelens::nn
