// Runs a synthetic exercise session through the engine without any sockets
// and prints what a display would show on each rep.

#include <iostream>

#include "seatrot/seatrot.hpp"

using namespace seatrot;

int main() {
  TrajectorySpec spec;
  spec.reps = 4;
  spec.noise_deg = 0.8;

  SessionProcessor session(EngineConfig{}, parse_utc("2025-01-15T10:30:45Z"));
  for (const auto& frame : generate_trajectory(spec)) {
    const auto out = session.on_frame(frame.frame);
    for (const auto& e : out.events) {
      std::cout << format_utc(session.snapshot().end_time) << "  " << to_string(e.kind) << "  "
                << e.prompt_text << "  (" << (e.delta >= 0 ? "+" : "") << e.delta << ")\n";
    }
  }
  std::cout << serialize_session(session.snapshot());
}
