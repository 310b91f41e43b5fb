#include "scl/io.hpp"

#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sys/stat.h>

static_assert(std::endian::native == std::endian::little,
              "the binary cache format is little-endian");

namespace scl {

namespace {

std::ofstream open_out(const std::string& path, std::ios::openmode mode = std::ios::out) {
    std::ofstream os(path, mode);
    if (!os) throw IoError("cannot open " + path + " for writing");
    return os;
}

const char* region_name(Region r) {
    switch (r) {
    case Region::LowerContact: return "LOWER_CONTACT";
    case Region::UpperContact: return "UPPER_CONTACT";
    default: return "CONTINUATION";
    }
}

} // namespace

bool file_exists(const std::string& path) {
    struct stat st{};
    return ::stat(path.c_str(), &st) == 0;
}

void write_curves_csv(const std::string& path, const CurvePair& curves) {
    auto os = open_out(path);
    os << "t,a,b\n";
    for (size_t n = 0; n < curves.t.size(); ++n)
        os << format17(curves.t[n]) << ',' << format17(curves.a[n]) << ','
           << format17(curves.b[n]) << '\n';
}

void write_terminal_csv(const std::string& path, const TransformedTerminal& tt,
                        const std::vector<double>& g_samples) {
    auto os = open_out(path);
    os << "y,g,g_tilde,G,G_tilde\n";
    for (size_t j = 0; j < tt.y.size(); ++j)
        os << format17(tt.y[j]) << ',' << format17(g_samples[j]) << ','
           << format17(tt.g_tilde[j]) << ',' << format17(tt.G[j]) << ','
           << format17(tt.G_tilde[j]) << '\n';
}

void write_surface_csv(const std::string& path, const ValueSurface& surface) {
    auto os = open_out(path);
    const Grid& grid = surface.grid;
    os << "t,y,V,region,residual\n";
    for (int n = 0; n < grid.nt(); ++n)
        for (int j = 0; j < grid.ny(); ++j) {
            const size_t id = grid.index(n, j);
            os << format17(grid.t(n)) << ',' << format17(grid.y(j)) << ','
               << format17(surface.V[id]) << ',' << region_name(surface.region[id]) << ','
               << format17(surface.residual[id]) << '\n';
        }
}

void write_boundaries_csv(const std::string& path, const FreeBoundaries& fb) {
    auto os = open_out(path);
    os << "t,a_tilde,b_tilde,da_dt,db_dt\n";
    for (size_t n = 0; n < fb.t.size(); ++n)
        os << format17(fb.t[n]) << ',' << format17(fb.a_tilde[n]) << ','
           << format17(fb.b_tilde[n]) << ',' << format17(fb.da_dt[n]) << ','
           << format17(fb.db_dt[n]) << '\n';
}

void write_w_csv(const std::string& path, const WSurface& ws, const ValueSurface& surface,
                 const HJBReport& hjb) {
    auto os = open_out(path);
    const Grid& grid = ws.grid;
    os << "s,x,W,Wx,residual,region\n";
    for (int n = 0; n < grid.nt(); ++n)
        for (int j = 0; j < grid.ny(); ++j) {
            const size_t id = grid.index(n, j);
            os << format17(grid.t(n)) << ',' << format17(grid.y(j)) << ','
               << format17(ws.W[id]) << ',' << format17(ws.Wx[id]) << ','
               << format17(hjb.values[id]) << ',' << region_name(surface.region[id]) << '\n';
        }
}

void write_holding_cost_csv(const std::string& path, const HoldingCost& hc) {
    auto os = open_out(path);
    os << "s,C\n";
    for (size_t n = 0; n < hc.C.size(); ++n)
        os << format17(hc.grid.t(static_cast<int>(n))) << ',' << format17(hc.C[n]) << '\n';
}

void write_text(const std::string& path, const std::string& content) {
    auto os = open_out(path);
    os << content;
}

void write_plot_curves(const std::string& path, const CurvePair& curves) {
    auto os = open_out(path);
    os << "# t a b\n";
    for (size_t n = 0; n < curves.t.size(); ++n)
        os << format17(curves.t[n]) << ' ' << format17(curves.a[n]) << ' '
           << format17(curves.b[n]) << '\n';
}

void write_plot_boundaries(const std::string& path, const FreeBoundaries& fb) {
    auto os = open_out(path);
    os << "# t a_tilde b_tilde\n";
    for (size_t n = 0; n < fb.t.size(); ++n)
        os << format17(fb.t[n]) << ' ' << format17(fb.a_tilde[n]) << ' '
           << format17(fb.b_tilde[n]) << '\n';
}

void write_plot_terminal_segment(const std::string& path, double horizon, double A, double B) {
    auto os = open_out(path);
    os << "# t y\n";
    os << format17(horizon) << ' ' << format17(A) << '\n';
    os << format17(horizon) << ' ' << format17(B) << '\n';
}

// ---------------------------------------------------------------------------
// Binary cache
// ---------------------------------------------------------------------------

namespace {

constexpr char kMagic[4] = {'S', 'C', 'L', '1'};

void put_bytes(std::ofstream& os, const void* data, size_t size) {
    os.write(static_cast<const char*>(data), static_cast<std::streamsize>(size));
}

void get_bytes(std::ifstream& is, void* data, size_t size) {
    is.read(static_cast<char*>(data), static_cast<std::streamsize>(size));
    if (!is) throw IoError("truncated cache file");
}

} // namespace

void write_cache(const std::string& path, const ValueSurface& surface,
                 const FreeBoundaries& fb) {
    auto os = open_out(path, std::ios::out | std::ios::binary);
    const Grid& grid = surface.grid;
    put_bytes(os, kMagic, 4);
    const uint32_t nt = static_cast<uint32_t>(grid.nt());
    const uint32_t ny = static_cast<uint32_t>(grid.ny());
    put_bytes(os, &nt, 4);
    put_bytes(os, &ny, 4);
    const double header[3] = {grid.horizon(), grid.band_lo(), grid.band_hi()};
    put_bytes(os, header, sizeof(header));
    put_bytes(os, surface.V.data(), surface.V.size() * sizeof(double));
    put_bytes(os, surface.residual.data(), surface.residual.size() * sizeof(double));
    put_bytes(os, surface.terminal.data(), surface.terminal.size() * sizeof(double));
    std::vector<uint8_t> regions(surface.region.size());
    for (size_t i = 0; i < regions.size(); ++i)
        regions[i] = static_cast<uint8_t>(surface.region[i]);
    put_bytes(os, regions.data(), regions.size());
    put_bytes(os, fb.a_tilde.data(), fb.a_tilde.size() * sizeof(double));
    put_bytes(os, fb.b_tilde.data(), fb.b_tilde.size() * sizeof(double));
}

CachedSolve read_cache(const std::string& path, const ProblemSpec& spec,
                       const SolverParams& params) {
    std::ifstream is(path, std::ios::in | std::ios::binary);
    if (!is) throw IoError("cannot open cache " + path);
    char magic[4];
    get_bytes(is, magic, 4);
    if (std::memcmp(magic, kMagic, 4) != 0) throw IoError("bad cache magic in " + path);
    uint32_t nt = 0, ny = 0;
    get_bytes(is, &nt, 4);
    get_bytes(is, &ny, 4);
    double header[3];
    get_bytes(is, header, sizeof(header));
    if (nt < 2 || ny < 3 || nt > 1u << 24 || ny > 1u << 24)
        throw IoError("implausible cache dimensions in " + path);

    Grid grid(header[0], header[1], header[2], static_cast<int>(nt), static_cast<int>(ny));
    CachedSolve out{ValueSurface{grid, params, {}, {}, {}, {}, {}, {}},
                    FreeBoundaries{}};
    ValueSurface& surface = out.surface;
    surface.V.resize(grid.size());
    surface.residual.resize(grid.size());
    surface.terminal.resize(static_cast<size_t>(ny));
    get_bytes(is, surface.V.data(), surface.V.size() * sizeof(double));
    get_bytes(is, surface.residual.data(), surface.residual.size() * sizeof(double));
    get_bytes(is, surface.terminal.data(), surface.terminal.size() * sizeof(double));
    std::vector<uint8_t> regions(grid.size());
    get_bytes(is, regions.data(), regions.size());
    surface.region.resize(grid.size());
    for (size_t i = 0; i < regions.size(); ++i) {
        if (regions[i] > 2) throw IoError("corrupt region byte in " + path);
        surface.region[i] = static_cast<Region>(regions[i]);
    }

    FreeBoundaries& fb = out.fb;
    fb.t.resize(nt);
    for (uint32_t n = 0; n < nt; ++n) fb.t[n] = grid.t(static_cast<int>(n));
    fb.a_tilde.resize(nt);
    fb.b_tilde.resize(nt);
    get_bytes(is, fb.a_tilde.data(), fb.a_tilde.size() * sizeof(double));
    get_bytes(is, fb.b_tilde.data(), fb.b_tilde.size() * sizeof(double));
    fb.da_dt.assign(nt, 0.0);
    fb.db_dt.assign(nt, 0.0);
    const double dt = grid.dt();
    for (uint32_t n = 0; n < nt; ++n) {
        const uint32_t nm = n > 0 ? n - 1 : 0;
        const uint32_t np = n + 1 < nt ? n + 1 : nt - 1;
        fb.da_dt[n] = (fb.a_tilde[np] - fb.a_tilde[nm]) / ((np - nm) * dt);
        fb.db_dt[n] = (fb.b_tilde[np] - fb.b_tilde[nm]) / ((np - nm) * dt);
    }

    // rebuild the obstacle tables from the problem and cross-check the cache
    surface.lower.resize(grid.size());
    surface.upper.resize(grid.size());
    for (int n = 0; n < grid.nt(); ++n) {
        const double t = grid.t(n);
        for (int j = 0; j < grid.ny(); ++j) {
            const size_t id = grid.index(n, j);
            surface.lower[id] = -spec.f1(t, grid.y(j));
            surface.upper[id] = spec.f2(t, grid.y(j));
            if (surface.V[id] < surface.lower[id] - 1e-9 ||
                surface.V[id] > surface.upper[id] + 1e-9)
                throw IoError("cache does not match the problem definition (obstacle "
                              "sandwich violated on load)");
        }
    }
    return out;
}

} // namespace scl
