#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <vector>

#include "xrsched/errors.h"

namespace xrsched {

using Rng = std::mt19937_64;

struct TruncatedGaussianParams {
  double mean = 0.0;
  double std = 0.0;
  double lower = 0.0;
  double upper = 0.0;

  // Throws ConfigError when the interval or spread is inconsistent.
  void validate() const;
};

struct XrTrafficConfig {
  double frame_rate = 60.0;
  TruncatedGaussianParams frame_size_kb{93.0, 10.0, 46.0, 141.0};
  TruncatedGaussianParams jitter_ms{0.0, 2.0, -4.0, 4.0};
  double psdb_ms = 15.0;
  std::int64_t pdu_payload_bytes = 1500;

  double frame_period_ms() const { return 1000.0 / frame_rate; }
  void validate() const;
};

struct Pdu {
  std::uint32_t pdu_index = 0;
  std::int64_t size_bits = 0;
  double arrival_time_ms = 0.0;
  std::int64_t remaining_bits = 0;  // not yet placed in a transport block
};

struct PduSet {
  std::uint32_t ue_id = 0;
  std::uint64_t set_index = 0;
  double first_arrival_ms = 0.0;
  double deadline_ms = 0.0;
  std::int64_t total_size_bits = 0;
  std::vector<Pdu> pdus;
  std::int64_t served_bits = 0;   // transmitted at least once, not rolled back
  std::int64_t decoded_bits = 0;  // credited after successful decoding
  std::optional<double> delivered_at_ms;

  std::int64_t pending_bits() const { return total_size_bits - served_bits; }
  bool delivered() const { return delivered_at_ms.has_value(); }
};

struct FrameArrival {
  double arrival_ms = 0.0;
  std::int64_t frame_bytes = 0;
};

/// Draws from N(mean, std^2) conditioned on [lower, upper] by rejection.
double sample_truncated_gaussian(const TruncatedGaussianParams& params, Rng& rng);

/// Frame n is nominally at n * period plus an independent jitter sample.
/// The result is sorted by arrival time.
std::vector<FrameArrival> generate_frame_arrivals(const XrTrafficConfig& config,
                                                  double duration_ms, Rng& rng);

/// Splits a frame into MTU-sized PDUs; only the last one may be shorter.
std::vector<Pdu> segment_frame(std::int64_t frame_bytes, std::int64_t pdu_payload_bytes,
                               double arrival_ms = 0.0);

PduSet make_pdu_set(std::uint32_t ue_id, std::uint64_t set_index, const FrameArrival& frame,
                    const XrTrafficConfig& config);

}  // namespace xrsched
