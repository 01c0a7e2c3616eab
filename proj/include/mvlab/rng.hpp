#pragma once

#include <array>
#include <cstdint>

namespace mvlab {

// Philox4x32-10 counter-based generator (Salmon et al., SC'11).
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                        std::array<std::uint32_t, 2> key);

// Noise layer tags; each layer of each particle draws from its own substream.
enum class Layer : std::uint8_t {
  kInitial = 0,
  kSmall = 1,
  kBig = 2,
  kCommonSmall = 3,
  kCommonBig = 4,
  kAuxiliary = 5,
};

// Identifies one substream. The tuple is packed verbatim into the Philox
// counter (experiment uses 24 bits), so distinct ids never share a block.
struct StreamId {
  std::uint32_t experiment = 0;
  std::uint32_t replica = 0;
  std::uint32_t particle = 0;
  Layer layer = Layer::kAuxiliary;

  StreamId with_layer(Layer l) const { return {experiment, replica, particle, l}; }
  StreamId with_particle(std::uint32_t p) const { return {experiment, replica, p, layer}; }

  friend bool operator==(const StreamId&, const StreamId&) = default;
};

inline constexpr std::uint32_t kMaxExperimentId = (1u << 24) - 1;

// Sequential reader over one Philox substream. Copying a stream copies its
// position; two streams constructed from equal (seed, id) emit identical
// sequences regardless of the thread that drives them.
class RandomStream {
 public:
  RandomStream(std::uint64_t seed, StreamId id);

  std::uint64_t next_u64();
  // Uniform on the open interval (0, 1), 53-bit resolution.
  double uniform();
  double exponential(double rate);
  double normal();

  std::uint64_t seed() const { return seed_; }
  const StreamId& id() const { return id_; }

 private:
  void refill();

  std::uint64_t seed_;
  StreamId id_;
  std::uint32_t block_ = 0;
  std::array<std::uint32_t, 4> buffer_{};
  int used_ = 4;
  bool has_spare_normal_ = false;
  double spare_normal_ = 0.0;
};

// A seed plus an id template; hands out per-particle, per-layer streams.
struct NoiseStream {
  std::uint64_t seed = 0;
  StreamId id;

  RandomStream open() const { return RandomStream(seed, id); }
  NoiseStream layer(Layer l) const { return {seed, id.with_layer(l)}; }
  NoiseStream particle(std::uint32_t p) const { return {seed, id.with_particle(p)}; }
};

// SplitMix64 finalizer; used to derive per-job seeds for the manifest.
std::uint64_t mix64(std::uint64_t x);

}  // namespace mvlab
