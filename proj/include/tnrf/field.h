// Copyright Contributors to the tnrf project
// SPDX-License-Identifier: Apache-2.0

// Learnable volumetric scene: a dense lattice of log-density and radiance
// preactivations, trilinearly interpolated and then activated.
//
//   sigma = exp(sigma_pre)
//   c     = exp(exp(radiance_pre)) - 1
//
// Lattice node (ix, iy, iz) sits at bbox.min + (ix, iy, iz) * spacing with
// spacing = extent / (resolution - 1), so the outermost nodes lie on the bbox
// faces. Positions outside the bbox have sigma = 0 and c = 0.

#pragma once

#include <tnrf/geometry.h>
#include <tnrf/scene.h>

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace tnrf {

inline constexpr int kMaxChannels = 3;

// Interpolated preactivations are clamped to these ranges before activation;
// outside them the activation is flat and passes no gradient.
inline constexpr double kSigmaPreMin = -15.0, kSigmaPreMax = 8.0;
inline constexpr double kRadiancePreMin = -15.0, kRadiancePreMax = 5.0;

double activate_sigma(double sigma_pre);
double activate_radiance(double radiance_pre);
// d activation / d preactivation, zero where clamped.
double activate_sigma_grad(double sigma_pre);
double activate_radiance_grad(double radiance_pre);

// Radiance parameterization: isotropic (one coefficient per channel) or a
// degree-1 spherical harmonic in the viewing direction (four coefficients:
// 1, wx, wy, wz).
enum class RadianceBasis : std::uint8_t { Isotropic = 1, SphericalHarmonic1 = 4 };

struct Resolution {
    int x, y, z;
    std::size_t count() const { return std::size_t(x) * y * z; }
    bool operator==(const Resolution &) const = default;
};

// Eight lattice nodes and trilinear weights around a position.
struct Stencil {
    std::array<std::uint32_t, 8> index;
    std::array<double, 8> weight;
    bool inside = false;
};

struct FieldSample {
    double sigma = 0;
    std::array<double, kMaxChannels> radiance{};
};

// Preactivations after interpolation (before clamping/activation).
struct FieldPre {
    double sigma_pre = 0;
    std::array<double, kMaxChannels> radiance_pre{};
};

class ParamGradients;

class VoxelField {
  public:
    VoxelField(Bounds3 bbox, Resolution resolution, int channels,
               RadianceBasis basis = RadianceBasis::Isotropic);

    const Bounds3 &bbox() const { return bbox_; }
    Resolution resolution() const { return res_; }
    int channels() const { return channels_; }
    RadianceBasis basis() const { return basis_; }
    int basis_terms() const { return int(basis_); }
    std::size_t node_count() const { return res_.count(); }
    std::size_t node_index(int ix, int iy, int iz) const {
        return (std::size_t(ix) * res_.y + iy) * res_.z + iz;
    }
    Vec3 node_position(int ix, int iy, int iz) const;
    Vec3 spacing() const { return spacing_; }

    // [node] log-density preactivations.
    std::span<double> sigma_pre() { return sigma_pre_; }
    std::span<const double> sigma_pre() const { return sigma_pre_; }
    // [node][channel][basis term] radiance preactivations.
    std::span<double> radiance_pre() { return radiance_pre_; }
    std::span<const double> radiance_pre() const { return radiance_pre_; }

    Stencil locate(const Vec3 &position) const;
    // Interpolated preactivations; `direction` is used by the SH basis only.
    FieldPre interpolate(const Stencil &s, const Vec3 &direction = {0, 0, 1}) const;
    FieldSample query(const Vec3 &position, const Vec3 &direction = {0, 0, 1}) const;

    // Adds dLoss/dpreactivation for the interpolated values back onto the
    // lattice nodes of `s`.
    void accumulate(const Stencil &s, const Vec3 &direction, double d_sigma_pre,
                    const double *d_radiance_pre, ParamGradients &grads) const;

    bool operator==(const VoxelField &) const = default;

  private:
    Bounds3 bbox_;
    Resolution res_;
    int channels_;
    RadianceBasis basis_;
    Vec3 spacing_;
    std::vector<double> sigma_pre_;
    std::vector<double> radiance_pre_;
};

// dLoss/dpreactivation with the same layout as the field parameters.
class ParamGradients {
  public:
    explicit ParamGradients(const VoxelField &field)
        : sigma(field.sigma_pre().size(), 0.0), radiance(field.radiance_pre().size(), 0.0) {}

    std::vector<double> sigma;
    std::vector<double> radiance;

    void zero();
    // this += other, element-wise.
    void add(const ParamGradients &other);
    // Throws if any entry is NaN or infinite.
    void check_finite() const;
};

VoxelField init_field(const Bounds3 &bbox, Resolution resolution, int channels,
                      double sigma_pre_init = -2.302585092994046,  // ln(0.1)
                      double radiance_pre_init = -3.0,
                      RadianceBasis basis = RadianceBasis::Isotropic);

FieldSample query(const VoxelField &field, const Vec3 &position, const Vec3 &direction = {0, 0, 1});

// Chain rule from activated-value adjoints (d_sigma, d_radiance) at
// `position` back to the lattice parameters.
void query_backward(const VoxelField &field, const Vec3 &position, double d_sigma,
                    std::span<const double> d_radiance, ParamGradients &grads,
                    const Vec3 &direction = {0, 0, 1});

// Checkpoint: "TNRF", u32 version, bbox as 6 f64 (min xyz, max xyz),
// resolution 3 u32, channels u32, [version 2: u32 basis terms], then
// sigma_pre and radiance_pre as f32. Version 1 is the isotropic basis.
std::vector<std::uint8_t> encode_checkpoint(const VoxelField &field);
VoxelField decode_checkpoint(std::vector<std::uint8_t> bytes, const std::string &source = {});
void write_checkpoint(const std::filesystem::path &path, const VoxelField &field);
VoxelField read_checkpoint(const std::filesystem::path &path);

}  // namespace tnrf
