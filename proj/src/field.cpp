// Copyright Contributors to the tnrf project
// SPDX-License-Identifier: Apache-2.0

#include <tnrf/field.h>

#include <tnrf/binary_io.h>
#include <tnrf/formats.h>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace tnrf {

double activate_sigma(double sigma_pre) {
    return std::exp(std::clamp(sigma_pre, kSigmaPreMin, kSigmaPreMax));
}

double activate_radiance(double radiance_pre) {
    return std::expm1(std::exp(std::clamp(radiance_pre, kRadiancePreMin, kRadiancePreMax)));
}

double activate_sigma_grad(double sigma_pre) {
    if (sigma_pre < kSigmaPreMin || sigma_pre > kSigmaPreMax)
        return 0.0;
    return std::exp(sigma_pre);
}

double activate_radiance_grad(double radiance_pre) {
    if (radiance_pre < kRadiancePreMin || radiance_pre > kRadiancePreMax)
        return 0.0;
    double e = std::exp(radiance_pre);
    return e * std::exp(e);
}

namespace {

inline void basis_values(RadianceBasis basis, const Vec3 &d, double *out) {
    out[0] = 1.0;
    if (basis == RadianceBasis::SphericalHarmonic1) {
        out[1] = d.x;
        out[2] = d.y;
        out[3] = d.z;
    }
}

}  // namespace

VoxelField::VoxelField(Bounds3 bbox, Resolution resolution, int channels, RadianceBasis basis)
    : bbox_(bbox), res_(resolution), channels_(channels), basis_(basis) {
    for (int a = 0; a < 3; ++a)
        if (!(bbox.min[a] < bbox.max[a]))
            throw std::invalid_argument("VoxelField: bbox min must be < max");
    if (res_.x < 2 || res_.y < 2 || res_.z < 2)
        throw std::invalid_argument("VoxelField: resolution must be >= 2 per axis");
    if (res_.count() >= (std::size_t(1) << 32))
        throw std::invalid_argument("VoxelField: resolution too large");
    if (channels != 1 && channels != 3)
        throw std::invalid_argument("VoxelField: channels must be 1 or 3");
    if (basis != RadianceBasis::Isotropic && basis != RadianceBasis::SphericalHarmonic1)
        throw std::invalid_argument("VoxelField: unknown radiance basis");
    Vec3 ext = bbox.diagonal();
    spacing_ = {ext.x / (res_.x - 1), ext.y / (res_.y - 1), ext.z / (res_.z - 1)};
    sigma_pre_.assign(res_.count(), 0.0);
    radiance_pre_.assign(res_.count() * channels_ * basis_terms(), 0.0);
}

Vec3 VoxelField::node_position(int ix, int iy, int iz) const {
    return {bbox_.min.x + ix * spacing_.x, bbox_.min.y + iy * spacing_.y,
            bbox_.min.z + iz * spacing_.z};
}

Stencil VoxelField::locate(const Vec3 &p) const {
    Stencil s;
    if (!bbox_.contains(p))
        return s;
    const int res[3] = {res_.x, res_.y, res_.z};
    int i0[3];
    double f[3];
    for (int a = 0; a < 3; ++a) {
        double g = (p[a] - bbox_.min[a]) / spacing_[a];
        int i = std::min(int(g), res[a] - 2);
        i0[a] = i;
        f[a] = std::clamp(g - i, 0.0, 1.0);
    }
    const std::uint32_t base = std::uint32_t(node_index(i0[0], i0[1], i0[2]));
    const std::uint32_t sx = std::uint32_t(res_.y) * res_.z, sy = std::uint32_t(res_.z);
    for (int c = 0; c < 8; ++c) {
        int bx = c >> 2 & 1, by = c >> 1 & 1, bz = c & 1;
        s.index[c] = base + bx * sx + by * sy + bz;
        s.weight[c] = (bx ? f[0] : 1 - f[0]) * (by ? f[1] : 1 - f[1]) * (bz ? f[2] : 1 - f[2]);
    }
    s.inside = true;
    return s;
}

FieldPre VoxelField::interpolate(const Stencil &s, const Vec3 &direction) const {
    FieldPre pre;
    if (!s.inside)
        return pre;
    const int terms = basis_terms();
    const int stride = channels_ * terms;
    double basis[4];
    basis_values(basis_, direction, basis);
    for (int c = 0; c < 8; ++c) {
        const double w = s.weight[c];
        pre.sigma_pre += w * sigma_pre_[s.index[c]];
        const double *r = &radiance_pre_[std::size_t(s.index[c]) * stride];
        for (int ch = 0; ch < channels_; ++ch) {
            double v = r[ch * terms];
            for (int t = 1; t < terms; ++t)
                v += basis[t] * r[ch * terms + t];
            pre.radiance_pre[ch] += w * v;
        }
    }
    return pre;
}

FieldSample VoxelField::query(const Vec3 &position, const Vec3 &direction) const {
    Stencil s = locate(position);
    FieldSample out;
    if (!s.inside)
        return out;
    FieldPre pre = interpolate(s, direction);
    out.sigma = activate_sigma(pre.sigma_pre);
    for (int ch = 0; ch < channels_; ++ch)
        out.radiance[ch] = activate_radiance(pre.radiance_pre[ch]);
    return out;
}

void VoxelField::accumulate(const Stencil &s, const Vec3 &direction, double d_sigma_pre,
                            const double *d_radiance_pre, ParamGradients &grads) const {
    if (!s.inside)
        return;
    const int terms = basis_terms();
    const int stride = channels_ * terms;
    double basis[4];
    basis_values(basis_, direction, basis);
    for (int c = 0; c < 8; ++c) {
        const double w = s.weight[c];
        grads.sigma[s.index[c]] += w * d_sigma_pre;
        if (d_radiance_pre) {
            double *g = &grads.radiance[std::size_t(s.index[c]) * stride];
            for (int ch = 0; ch < channels_; ++ch)
                for (int t = 0; t < terms; ++t)
                    g[ch * terms + t] += w * basis[t] * d_radiance_pre[ch];
        }
    }
}

void ParamGradients::zero() {
    std::fill(sigma.begin(), sigma.end(), 0.0);
    std::fill(radiance.begin(), radiance.end(), 0.0);
}

void ParamGradients::add(const ParamGradients &other) {
    for (std::size_t k = 0; k < sigma.size(); ++k)
        sigma[k] += other.sigma[k];
    for (std::size_t k = 0; k < radiance.size(); ++k)
        radiance[k] += other.radiance[k];
}

void ParamGradients::check_finite() const {
    for (std::size_t k = 0; k < sigma.size(); ++k)
        if (!std::isfinite(sigma[k]))
            throw std::runtime_error("non-finite density gradient at node " + std::to_string(k));
    for (std::size_t k = 0; k < radiance.size(); ++k)
        if (!std::isfinite(radiance[k]))
            throw std::runtime_error("non-finite radiance gradient at entry " + std::to_string(k));
}

VoxelField init_field(const Bounds3 &bbox, Resolution resolution, int channels,
                      double sigma_pre_init, double radiance_pre_init, RadianceBasis basis) {
    VoxelField f(bbox, resolution, channels, basis);
    std::fill(f.sigma_pre().begin(), f.sigma_pre().end(), sigma_pre_init);
    auto rad = f.radiance_pre();
    const int terms = f.basis_terms();
    for (std::size_t k = 0; k < rad.size(); ++k)
        rad[k] = (k % terms == 0) ? radiance_pre_init : 0.0;
    return f;
}

FieldSample query(const VoxelField &field, const Vec3 &position, const Vec3 &direction) {
    return field.query(position, direction);
}

void query_backward(const VoxelField &field, const Vec3 &position, double d_sigma,
                    std::span<const double> d_radiance, ParamGradients &grads,
                    const Vec3 &direction) {
    if (!std::isfinite(d_sigma))
        throw std::invalid_argument("query_backward: non-finite density adjoint");
    for (double d : d_radiance)
        if (!std::isfinite(d))
            throw std::invalid_argument("query_backward: non-finite radiance adjoint");
    Stencil s = field.locate(position);
    if (!s.inside)
        return;
    FieldPre pre = field.interpolate(s, direction);
    double d_rad_pre[kMaxChannels] = {};
    for (int ch = 0; ch < field.channels() && ch < int(d_radiance.size()); ++ch)
        d_rad_pre[ch] = d_radiance[ch] * activate_radiance_grad(pre.radiance_pre[ch]);
    field.accumulate(s, direction, d_sigma * activate_sigma_grad(pre.sigma_pre), d_rad_pre, grads);
}

std::vector<std::uint8_t> encode_checkpoint(const VoxelField &field) {
    ByteWriter w;
    w.magic("TNRF");
    const bool iso = field.basis() == RadianceBasis::Isotropic;
    w.u32(iso ? 1 : 2);
    for (int a = 0; a < 3; ++a)
        w.f64(field.bbox().min[a]);
    for (int a = 0; a < 3; ++a)
        w.f64(field.bbox().max[a]);
    w.u32(std::uint32_t(field.resolution().x));
    w.u32(std::uint32_t(field.resolution().y));
    w.u32(std::uint32_t(field.resolution().z));
    w.u32(std::uint32_t(field.channels()));
    if (!iso)
        w.u32(std::uint32_t(field.basis_terms()));
    w.reserve(w.bytes().size() + 4 * (field.sigma_pre().size() + field.radiance_pre().size()));
    for (double v : field.sigma_pre())
        w.f32(float(v));
    for (double v : field.radiance_pre())
        w.f32(float(v));
    return w.bytes();
}

VoxelField decode_checkpoint(std::vector<std::uint8_t> bytes, const std::string &source) {
    ByteReader r(std::move(bytes), source);
    r.expect_magic("TNRF");
    std::uint32_t version = r.u32();
    if (version != 1 && version != 2)
        r.fail("unsupported checkpoint version " + std::to_string(version));
    Bounds3 bbox;
    for (int a = 0; a < 3; ++a)
        bbox.min[a] = r.f64();
    for (int a = 0; a < 3; ++a)
        bbox.max[a] = r.f64();
    Resolution res{int(r.u32()), int(r.u32()), int(r.u32())};
    int channels = int(r.u32());
    RadianceBasis basis = RadianceBasis::Isotropic;
    if (version == 2) {
        std::uint32_t terms = r.u32();
        if (terms != 4)
            r.fail("unsupported radiance basis size " + std::to_string(terms));
        basis = RadianceBasis::SphericalHarmonic1;
    }
    VoxelField field = [&] {
        try {
            return VoxelField(bbox, res, channels, basis);
        } catch (const std::invalid_argument &e) {
            r.fail(e.what());
        }
    }();
    if (r.remaining() != 4 * (field.sigma_pre().size() + field.radiance_pre().size()))
        r.fail("payload size does not match header");
    for (double &v : field.sigma_pre())
        v = r.f32();
    for (double &v : field.radiance_pre())
        v = r.f32();
    return field;
}

void write_checkpoint(const std::filesystem::path &path, const VoxelField &field) {
    write_file_bytes(path, encode_checkpoint(field));
}

VoxelField read_checkpoint(const std::filesystem::path &path) {
    return decode_checkpoint(read_file_bytes(path), path.string());
}

}  // namespace tnrf
