#include "xrsched/traffic_model.h"

#include <algorithm>
#include <cmath>
#include <string>

namespace xrsched {

void TruncatedGaussianParams::validate() const {
  if (!std::isfinite(mean) || !std::isfinite(std) || !std::isfinite(lower) ||
      !std::isfinite(upper)) {
    throw ConfigError("truncated gaussian: non-finite parameter");
  }
  if (std < 0.0) {
    throw ConfigError("truncated gaussian: negative standard deviation");
  }
  if (lower > mean || mean > upper) {
    throw ConfigError("truncated gaussian: mean " + std::to_string(mean) + " outside [" +
                      std::to_string(lower) + ", " + std::to_string(upper) + "]");
  }
  if (std > 0.0 && !(lower < upper)) {
    throw ConfigError("truncated gaussian: empty interval with positive spread");
  }
}

void XrTrafficConfig::validate() const {
  if (!(frame_rate > 0.0)) throw ConfigError("frame_rate must be > 0");
  if (!(psdb_ms > 0.0)) throw ConfigError("psdb_ms must be > 0");
  if (pdu_payload_bytes <= 0) throw ConfigError("pdu_payload_bytes must be > 0");
  frame_size_kb.validate();
  jitter_ms.validate();
  if (frame_size_kb.lower <= 0.0) throw ConfigError("frame size interval must be positive");
}

double sample_truncated_gaussian(const TruncatedGaussianParams& params, Rng& rng) {
  params.validate();
  if (params.std == 0.0) return params.mean;
  std::normal_distribution<double> normal(params.mean, params.std);
  for (;;) {
    const double x = normal(rng);
    if (x >= params.lower && x <= params.upper) return x;
  }
}

std::vector<FrameArrival> generate_frame_arrivals(const XrTrafficConfig& config,
                                                  double duration_ms, Rng& rng) {
  config.validate();
  std::vector<FrameArrival> frames;
  if (!(duration_ms > 0.0)) return frames;
  const double period = config.frame_period_ms();
  for (std::int64_t n = 0;; ++n) {
    const double nominal = static_cast<double>(n) * period;
    if (nominal >= duration_ms) break;
    FrameArrival f;
    f.arrival_ms = nominal + sample_truncated_gaussian(config.jitter_ms, rng);
    const double kb = sample_truncated_gaussian(config.frame_size_kb, rng);
    f.frame_bytes = std::max<std::int64_t>(1, std::llround(kb * 1000.0));
    frames.push_back(f);
  }
  std::stable_sort(frames.begin(), frames.end(),
                   [](const FrameArrival& a, const FrameArrival& b) {
                     return a.arrival_ms < b.arrival_ms;
                   });
  return frames;
}

std::vector<Pdu> segment_frame(std::int64_t frame_bytes, std::int64_t pdu_payload_bytes,
                               double arrival_ms) {
  if (frame_bytes <= 0) throw ContractError("segment_frame: frame_bytes must be > 0");
  if (pdu_payload_bytes <= 0) throw ContractError("segment_frame: payload must be > 0");
  const std::int64_t count = (frame_bytes + pdu_payload_bytes - 1) / pdu_payload_bytes;
  std::vector<Pdu> pdus;
  pdus.reserve(static_cast<std::size_t>(count));
  std::int64_t left = frame_bytes;
  for (std::int64_t j = 0; j < count; ++j) {
    const std::int64_t bytes = std::min(left, pdu_payload_bytes);
    left -= bytes;
    Pdu p;
    p.pdu_index = static_cast<std::uint32_t>(j);
    p.size_bits = bytes * 8;
    p.remaining_bits = p.size_bits;
    p.arrival_time_ms = arrival_ms;
    pdus.push_back(p);
  }
  return pdus;
}

PduSet make_pdu_set(std::uint32_t ue_id, std::uint64_t set_index, const FrameArrival& frame,
                    const XrTrafficConfig& config) {
  PduSet set;
  set.ue_id = ue_id;
  set.set_index = set_index;
  set.first_arrival_ms = frame.arrival_ms;
  set.deadline_ms = frame.arrival_ms + config.psdb_ms;
  set.pdus = segment_frame(frame.frame_bytes, config.pdu_payload_bytes, frame.arrival_ms);
  set.total_size_bits = frame.frame_bytes * 8;
  return set;
}

}  // namespace xrsched
