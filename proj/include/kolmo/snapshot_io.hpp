#pragma once

#include <filesystem>

#include "kolmo/fields.hpp"

namespace kolmo {

// Field snapshot file ("KDA1"):
//   magic "KDA1" | n: u32 | time: f64 | kind: u8 | payload f64 row-major
// kind 0 stores the physical vorticity (n*n values); kind 1 stores u_x then
// u_y (2*n*n values). All scalars little-endian.

enum class SnapshotKind : std::uint8_t { Vorticity = 0, Velocity = 1 };

struct Snapshot {
    SnapshotKind kind = SnapshotKind::Vorticity;
    double time = 0.0;
    Grid grid{4};
    std::vector<double> payload;
};

void write_snapshot(const std::filesystem::path& path, const Snapshot& snap);
Snapshot read_snapshot(const std::filesystem::path& path);

void write_vorticity(const std::filesystem::path& path, const SpectralField& omega, double time);
void write_velocity(const std::filesystem::path& path, const VelocityField& vel, double time);
/// Reads either kind and returns the vorticity spectrum.
SpectralField read_vorticity(const std::filesystem::path& path, double* time = nullptr);

}  // namespace kolmo
