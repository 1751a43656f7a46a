#pragma once

#include <cstdint>
#include <span>
#include <variant>
#include <vector>

namespace dsel {

// Feature vector with a real target (or a class index stored as a real).
struct FeaturePayload {
  std::vector<double> x;
  double y = 0.0;
};

// Byte context window followed by the byte to predict.
struct BytePayload {
  std::vector<std::uint8_t> context;
  std::uint8_t next = 0;
};

// One training record. Domain provenance is deliberately not stored here;
// it lives in Dataset and is only reachable through the diagnostics accessor.
struct Example {
  std::int64_t id = 0;
  std::variant<FeaturePayload, BytePayload> payload;

  const FeaturePayload* features() const { return std::get_if<FeaturePayload>(&payload); }
  const BytePayload* bytes() const { return std::get_if<BytePayload>(&payload); }
};

using Batch = std::span<const Example>;

}  // namespace dsel
