#include "kolmo/snapshot_io.hpp"

#include <fstream>

#include "kolmo/binary_io.hpp"
#include "kolmo/fft.hpp"
#include "kolmo/spectral_ops.hpp"

namespace kolmo {

void write_snapshot(const std::filesystem::path& path, const Snapshot& snap) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
    binary::write_magic(os, "KDA1");
    binary::write_le<std::uint32_t>(os, static_cast<std::uint32_t>(snap.grid.n()));
    binary::write_le<double>(os, snap.time);
    binary::write_le<std::uint8_t>(os, static_cast<std::uint8_t>(snap.kind));
    for (double v : snap.payload) binary::write_le<double>(os, v);
}

Snapshot read_snapshot(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open " + path.string());
    binary::expect_magic(is, "KDA1");
    Snapshot snap;
    snap.grid = Grid(static_cast<int>(binary::read_le<std::uint32_t>(is)));
    snap.time = binary::read_le<double>(is);
    const auto kind = binary::read_le<std::uint8_t>(is);
    if (kind > 1) throw std::runtime_error("unknown snapshot kind");
    snap.kind = static_cast<SnapshotKind>(kind);
    const std::size_t count = snap.grid.size() * (snap.kind == SnapshotKind::Velocity ? 2 : 1);
    snap.payload.resize(count);
    for (auto& v : snap.payload) v = binary::read_le<double>(is);
    return snap;
}

void write_vorticity(const std::filesystem::path& path, const SpectralField& omega, double time) {
    write_snapshot(path, {SnapshotKind::Vorticity, time, omega.grid, to_physical(omega).values});
}

void write_velocity(const std::filesystem::path& path, const VelocityField& vel, double time) {
    Snapshot snap{SnapshotKind::Velocity, time, vel.grid, vel.ux};
    snap.payload.insert(snap.payload.end(), vel.uy.begin(), vel.uy.end());
    write_snapshot(path, snap);
}

SpectralField read_vorticity(const std::filesystem::path& path, double* time) {
    const Snapshot snap = read_snapshot(path);
    if (time != nullptr) *time = snap.time;
    if (snap.kind == SnapshotKind::Vorticity) return to_spectral(RealField(snap.grid, snap.payload));
    VelocityField vel(snap.grid);
    const auto half = static_cast<std::ptrdiff_t>(snap.grid.size());
    vel.ux.assign(snap.payload.begin(), snap.payload.begin() + half);
    vel.uy.assign(snap.payload.begin() + half, snap.payload.end());
    return vorticity_from_velocity(vel);
}

}  // namespace kolmo
