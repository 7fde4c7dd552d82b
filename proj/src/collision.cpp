#include "lorasim/collision.hpp"

#include <stdexcept>

namespace lorasim {

bool overlaps(const Transmission& a, const Transmission& b) {
  return a.start_s < b.end_s() && b.start_s < a.end_s();
}

bool overlaps_vulnerable(const Transmission& victim, const Transmission& other,
                         TimingMode mode, const RadioConstants& radio) {
  if (mode == TimingMode::WholePacket) return overlaps(victim, other);
  const double t_sym = phy::symbol_time_s(victim.params.sf, radio.bandwidth_hz);
  const int lead = radio.preamble_symbols > 5 ? radio.preamble_symbols - 5 : 0;
  const double critical_start = victim.start_s + lead * t_sym;
  return critical_start < other.end_s() && other.start_s < victim.end_s();
}

bool collides(const Transmission& victim, std::span<const Transmission> others,
              const CollisionConfig& cfg, const RadioConstants& radio) {
  for (const auto& other : others) {
    if (other.id == victim.id) continue;
    if (other.params.channel != victim.params.channel) continue;
    if (other.params.sf != victim.params.sf) continue;
    if (!overlaps_vulnerable(victim, other, cfg.timing, radio)) continue;
    const bool captured = victim.rssi_dbm >= other.rssi_dbm + cfg.capture_threshold_db;
    if (!captured) return true;
  }
  return false;
}

void resolve_collisions(std::span<Transmission> window, const CollisionConfig& cfg,
                        const RadioConstants& radio) {
  // flags are computed from rssi/params only, so in-place assignment is safe
  for (auto& t : window) t.collided = collides(t, window, cfg, radio);
}

namespace {

template <typename PowerOf>
bool signal_lost_impl(const Transmission& victim, std::span<const Transmission> others,
                      PowerOf power_mw, double noise_dbm, const CollisionConfig& cfg,
                      const RadioConstants& radio) {
  if (victim.rssi_dbm < phy::receiver_sensitivity_dbm(victim.params.sf, radio.bandwidth_hz)) {
    return true;
  }
  double interference_mw = 0.0;
  for (std::size_t i = 0; i < others.size(); ++i) {
    const Transmission& other = others[i];
    if (other.id == victim.id) continue;
    if (other.params.channel != victim.params.channel) continue;
    if (other.params.sf == victim.params.sf) continue;
    if (!overlaps_vulnerable(victim, other, cfg.timing, radio)) continue;
    interference_mw += power_mw(i);
  }
  const double threshold = phy::sinr_threshold_db(victim.params.sf);
  if (interference_mw == 0.0) return victim.rssi_dbm - noise_dbm < threshold;
  const double sinr =
      victim.rssi_dbm - phy::mw_to_dbm(interference_mw + phy::dbm_to_mw(noise_dbm));
  return sinr < threshold;
}

}  // namespace

bool signal_lost(const Transmission& victim, std::span<const Transmission> others,
                 double noise_dbm, const CollisionConfig& cfg, const RadioConstants& radio) {
  return signal_lost_impl(
      victim, others, [&](std::size_t i) { return phy::dbm_to_mw(others[i].rssi_dbm); },
      noise_dbm, cfg, radio);
}

bool signal_lost(const Transmission& victim, std::span<const Transmission> others,
                 std::span<const double> others_rssi_mw, double noise_dbm,
                 const CollisionConfig& cfg, const RadioConstants& radio) {
  if (others_rssi_mw.size() != others.size()) {
    throw std::invalid_argument("power cache does not match the window");
  }
  return signal_lost_impl(
      victim, others, [&](std::size_t i) { return others_rssi_mw[i]; }, noise_dbm, cfg, radio);
}

void assign_signal_flags(std::span<Transmission> window, const CollisionConfig& cfg,
                         const RadioConstants& radio) {
  for (auto& t : window) t.signal_lost = signal_lost(t, window, t.noise_dbm, cfg, radio);
}

void assign_signal_flags(std::span<Transmission> window, double noise_dbm,
                         const CollisionConfig& cfg, const RadioConstants& radio) {
  for (auto& t : window) {
    t.noise_dbm = noise_dbm;
    t.signal_lost = signal_lost(t, window, noise_dbm, cfg, radio);
  }
}

}  // namespace lorasim
