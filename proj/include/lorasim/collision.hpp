#pragma once

#include <cstddef>
#include <cstdint>
#include <span>

#include "lorasim/phy.hpp"

namespace lorasim {

/// A packet on air, as seen by the gateway.
struct Transmission {
  std::uint64_t id = 0;
  std::size_t node_id = 0;
  LoRaParams params;
  int payload_bytes = 0;
  double start_s = 0.0;
  double toa_s = 0.0;
  double rssi_dbm = 0.0;
  double noise_dbm = -117.0;  // noise power sampled for this reception
  bool collided = false;      // C_j
  bool signal_lost = false;   // S_j

  [[nodiscard]] double end_s() const { return start_s + toa_s; }
  [[nodiscard]] bool received() const { return !collided && !signal_lost; }
};

enum class TimingMode {
  WholePacket,      // any overlap of [start, end) intervals counts
  CriticalSection,  // only overlap with the victim's last 5 preamble symbols onward
};

struct CollisionConfig {
  double capture_threshold_db = 6.0;
  TimingMode timing = TimingMode::WholePacket;
};

/// Half-open interval intersection of the two airtimes.
bool overlaps(const Transmission& a, const Transmission& b);

/// Whether `other` is on air during the vulnerable part of `victim`.
bool overlaps_vulnerable(const Transmission& victim, const Transmission& other,
                         TimingMode mode, const RadioConstants& radio);

/// C_j for one packet against the rest of its window (entries equal to
/// `victim` by id are skipped). `victim` is lost iff some same-CF same-SF
/// overlapper is not beaten by the capture margin.
bool collides(const Transmission& victim, std::span<const Transmission> others,
              const CollisionConfig& cfg, const RadioConstants& radio);

/// Assigns collided on every element of the window.
void resolve_collisions(std::span<Transmission> window, const CollisionConfig& cfg,
                        const RadioConstants& radio);

/// S_j for one packet: sensitivity, then SINR against same-CF
/// different-SF overlappers plus `noise_dbm`.
bool signal_lost(const Transmission& victim, std::span<const Transmission> others,
                 double noise_dbm, const CollisionConfig& cfg, const RadioConstants& radio);

/// Same, with each window entry's RSSI already converted to mW.
bool signal_lost(const Transmission& victim, std::span<const Transmission> others,
                 std::span<const double> others_rssi_mw, double noise_dbm,
                 const CollisionConfig& cfg, const RadioConstants& radio);

/// Assigns signal_lost on every element of the window, using each
/// packet's own noise_dbm sample.
void assign_signal_flags(std::span<Transmission> window, const CollisionConfig& cfg,
                         const RadioConstants& radio);

/// Same, with one noise power for the whole window.
void assign_signal_flags(std::span<Transmission> window, double noise_dbm,
                         const CollisionConfig& cfg, const RadioConstants& radio);

}  // namespace lorasim
