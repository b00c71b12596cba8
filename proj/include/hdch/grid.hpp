#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "hdch/errors.hpp"

namespace hdch {

/// Cell-centered rectangular grid. Cell (i,j) has its center at
/// ((i+1/2)hx, (j+1/2)hy) with hx = lx/nx, hy = ly/ny.
struct Grid {
    int nx = 0, ny = 0;
    double lx = 0.0, ly = 0.0;

    Grid() = default;
    Grid(int nx_, int ny_, double lx_, double ly_) : nx(nx_), ny(ny_), lx(lx_), ly(ly_) {
        if (nx < 4 || ny < 4) throw InvalidParams("Grid: nx, ny must be >= 4");
        if (nx % 2 != 0 || ny % 2 != 0) throw InvalidParams("Grid: nx, ny must be even");
        if (!(lx > 0.0) || !(ly > 0.0)) throw InvalidParams("Grid: lengths must be positive");
    }

    double hx() const { return lx / nx; }
    double hy() const { return ly / ny; }
    double area() const { return lx * ly; }
    double cell_area() const { return hx() * hy(); }
    int size() const { return nx * ny; }

    double x(int i) const { return (i + 0.5) * hx(); }
    double y(int j) const { return (j + 0.5) * hy(); }

    bool operator==(const Grid& o) const {
        return nx == o.nx && ny == o.ny && lx == o.lx && ly == o.ly;
    }
};

/// Scalar field sampled at cell centers, row-major with the x index
/// fastest: values[j*nx + i] ~ f((i+1/2)hx, (j+1/2)hy).
class Field {
public:
    Field() = default;
    explicit Field(const Grid& g, double fill = 0.0) : grid_(g), v_(static_cast<size_t>(g.size()), fill) {}

    template <class F>
    static Field from_function(const Grid& g, F&& f) {
        Field out(g);
        for (int j = 0; j < g.ny; ++j)
            for (int i = 0; i < g.nx; ++i) out(i, j) = f(g.x(i), g.y(j));
        return out;
    }

    const Grid& grid() const { return grid_; }
    int size() const { return static_cast<int>(v_.size()); }

    double& operator()(int i, int j) { return v_[static_cast<size_t>(j) * grid_.nx + i]; }
    double operator()(int i, int j) const { return v_[static_cast<size_t>(j) * grid_.nx + i]; }
    double& operator[](size_t k) { return v_[k]; }
    double operator[](size_t k) const { return v_[k]; }

    double* data() { return v_.data(); }
    const double* data() const { return v_.data(); }
    const std::vector<double>& values() const { return v_; }

    bool all_finite() const {
        for (double x : v_)
            if (!std::isfinite(x)) return false;
        return true;
    }

    Field& operator+=(const Field& o) { check(o); for (size_t k = 0; k < v_.size(); ++k) v_[k] += o.v_[k]; return *this; }
    Field& operator-=(const Field& o) { check(o); for (size_t k = 0; k < v_.size(); ++k) v_[k] -= o.v_[k]; return *this; }
    Field& operator*=(double a) { for (double& x : v_) x *= a; return *this; }
    Field& operator+=(double a) { for (double& x : v_) x += a; return *this; }

    friend Field operator+(Field a, const Field& b) { a += b; return a; }
    friend Field operator-(Field a, const Field& b) { a -= b; return a; }
    friend Field operator*(double s, Field a) { a *= s; return a; }

private:
    void check(const Field& o) const {
        if (!(grid_ == o.grid_)) throw InvalidParams("Field: grid mismatch");
    }
    Grid grid_;
    std::vector<double> v_;
};

// --- snapshot file format -------------------------------------------------
//
// Little-endian header: magic "HDCH", u32 version=1, u32 nx, u32 ny,
// f64 lx, f64 ly, followed by nx*ny f64 values in row-major order
// (x index fastest).

inline void save_field(const Field& f, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("save_field: cannot open " + path);
    const Grid& g = f.grid();
    os.write("HDCH", 4);
    auto put_u32 = [&](uint32_t v) { os.write(reinterpret_cast<const char*>(&v), 4); };
    auto put_f64 = [&](double v) { os.write(reinterpret_cast<const char*>(&v), 8); };
    put_u32(1u);
    put_u32(static_cast<uint32_t>(g.nx));
    put_u32(static_cast<uint32_t>(g.ny));
    put_f64(g.lx);
    put_f64(g.ly);
    os.write(reinterpret_cast<const char*>(f.data()), static_cast<std::streamsize>(sizeof(double)) * g.size());
    if (!os) throw IoError("save_field: write failed for " + path);
}

inline Field load_field(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("load_field: cannot open " + path);
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, "HDCH", 4) != 0) throw IoError("load_field: bad magic in " + path);
    auto get_u32 = [&] { uint32_t v = 0; is.read(reinterpret_cast<char*>(&v), 4); return v; };
    auto get_f64 = [&] { double v = 0; is.read(reinterpret_cast<char*>(&v), 8); return v; };
    uint32_t version = get_u32();
    if (version != 1u) throw IoError("load_field: unsupported version in " + path);
    uint32_t nx = get_u32(), ny = get_u32();
    double lx = get_f64(), ly = get_f64();
    Field f(Grid(static_cast<int>(nx), static_cast<int>(ny), lx, ly));
    is.read(reinterpret_cast<char*>(f.data()), static_cast<std::streamsize>(sizeof(double)) * f.size());
    if (!is) throw IoError("load_field: truncated file " + path);
    return f;
}

} // namespace hdch
