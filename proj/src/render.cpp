#include "radmap/render.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>

#include "radmap/image_ops.hpp"

namespace radmap {

namespace {

constexpr double kAlphaSkip = 1.0 / 255.0;
constexpr double kAlphaClamp = 0.99;
constexpr double kTransmittanceMin = 1e-4;
constexpr int kTileSize = 16;

struct Prepared {
  bool valid = false;
  Vec2 mu2d = Vec2::Zero();
  Mat2 inv_cov2d = Mat2::Identity();
  double depth = 0.0;
  double opacity = 0.0;
  double radius = 0.0;
  Vec3 color = Vec3::Zero();
  Vec3 normal = Vec3::Zero();
  bool sky = false;
  // cached for the backward pass
  Vec3 p_cam = Vec3::Zero();
  Eigen::Matrix<double, 2, 3> jac = Eigen::Matrix<double, 2, 3>::Zero();
  Mat3 cam_cov = Mat3::Zero();  // V = W Sigma W^T
  Mat3 rot = Mat3::Identity();
  Quat q_unit = Quat::Identity();  // the stored quaternion, normalized
  Vec3 scale = Vec3::Ones();
  int min_axis = 0;
  double normal_sign = 1.0;
};

struct Prep {
  std::vector<Prepared> data;
  std::vector<int> order;  // visible gaussians sorted by (depth, index)
  int tiles_x = 0;
  int tiles_y = 0;
  std::vector<std::vector<int>> tiles;
};

double largest_eigenvalue(const Mat2& m) {
  const double mid = 0.5 * (m(0, 0) + m(1, 1));
  const double disc = std::sqrt(std::max(0.0, 0.25 * (m(0, 0) - m(1, 1)) * (m(0, 0) - m(1, 1)) +
                                                   m(0, 1) * m(0, 1)));
  return mid + disc;
}

Prep prepare(const GaussianMap& map, const Camera& cam) {
  Prep prep;
  prep.data.resize(map.size());
  const Vec3 cam_pos = cam.camera_position();
  const Mat3& w = cam.world_to_camera.rotation;

#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t gi = 0; gi < static_cast<std::ptrdiff_t>(map.size()); ++gi) {
    const Gaussian& g = map.gaussians[static_cast<std::size_t>(gi)];
    Prepared& p = prep.data[static_cast<std::size_t>(gi)];
    p.sky = g.sky;
    p.opacity = g.opacity();
    if (p.opacity < kAlphaSkip) continue;  // cannot clear the alpha threshold

    const Vec3 pc = cam.to_camera(g.mu);
    if (pc.z() <= 0.01) continue;
    p.p_cam = pc;
    p.depth = pc.z();
    p.mu2d = cam.project_camera(pc);

    const double z_inv = 1.0 / pc.z();
    p.jac << cam.fx * z_inv, 0.0, -cam.fx * pc.x() * z_inv * z_inv,
        0.0, cam.fy * z_inv, -cam.fy * pc.y() * z_inv * z_inv;

    p.q_unit = g.rotation.normalized();
    p.rot = p.q_unit.toRotationMatrix();
    p.scale = g.scale();
    const Mat3 rs = p.rot * p.scale.asDiagonal();
    p.cam_cov = w * (rs * rs.transpose()) * w.transpose();
    const Mat2 cov2d =
        p.jac * p.cam_cov * p.jac.transpose() + 0.3 * Mat2::Identity();
    const double det = cov2d(0, 0) * cov2d(1, 1) - cov2d(0, 1) * cov2d(1, 0);
    p.inv_cov2d << cov2d(1, 1) / det, -cov2d(0, 1) / det, -cov2d(1, 0) / det, cov2d(0, 0) / det;

    // Any pixel center outside this radius has alpha < 1/255 for sure.
    const double q_cut = 2.0 * std::log(p.opacity / kAlphaSkip);
    p.radius = std::sqrt(std::max(q_cut, 0.0) * largest_eigenvalue(cov2d));

    if (p.mu2d.x() + p.radius < 0.0 || p.mu2d.x() - p.radius >= cam.width ||
        p.mu2d.y() + p.radius < 0.0 || p.mu2d.y() - p.radius >= cam.height) {
      continue;
    }

    p.color = g.color;
    int axis = 0;
    if (p.scale[1] < p.scale[axis]) axis = 1;
    if (p.scale[2] < p.scale[axis]) axis = 2;
    p.min_axis = axis;
    Vec3 n = p.rot.col(axis);
    p.normal_sign = n.dot(g.mu - cam_pos) > 0.0 ? -1.0 : 1.0;
    p.normal = p.normal_sign * n;
    p.valid = true;
  }

  prep.order.reserve(map.size());
  for (int i = 0; i < static_cast<int>(map.size()); ++i) {
    if (prep.data[static_cast<std::size_t>(i)].valid) prep.order.push_back(i);
  }
  std::sort(prep.order.begin(), prep.order.end(), [&](int a, int b) {
    const double da = prep.data[static_cast<std::size_t>(a)].depth;
    const double db = prep.data[static_cast<std::size_t>(b)].depth;
    return da < db || (da == db && a < b);
  });

  prep.tiles_x = (cam.width + kTileSize - 1) / kTileSize;
  prep.tiles_y = (cam.height + kTileSize - 1) / kTileSize;
  prep.tiles.assign(static_cast<std::size_t>(prep.tiles_x * prep.tiles_y), {});
  for (int id : prep.order) {
    const Prepared& p = prep.data[static_cast<std::size_t>(id)];
    const int x0 = std::max(0, static_cast<int>(std::floor(p.mu2d.x() - p.radius)) - 1);
    const int x1 = std::min(cam.width - 1, static_cast<int>(std::ceil(p.mu2d.x() + p.radius)) + 1);
    const int y0 = std::max(0, static_cast<int>(std::floor(p.mu2d.y() - p.radius)) - 1);
    const int y1 = std::min(cam.height - 1, static_cast<int>(std::ceil(p.mu2d.y() + p.radius)) + 1);
    if (x0 > x1 || y0 > y1) continue;
    for (int ty = y0 / kTileSize; ty <= y1 / kTileSize; ++ty) {
      for (int tx = x0 / kTileSize; tx <= x1 / kTileSize; ++tx) {
        prep.tiles[static_cast<std::size_t>(ty * prep.tiles_x + tx)].push_back(id);
      }
    }
  }
  return prep;
}

struct Contribution {
  int id = 0;
  double alpha = 0.0;
  double t_before = 1.0;
};

/// Front-to-back compositing for one pixel; optionally records the
/// surviving contributions for the backward pass.
inline void composite_pixel(const Prep& prep, int px, int py, const RenderOptions& opts,
                            Vec3& color, double& depth, Vec3& normal_raw, double& alpha_out,
                            std::vector<Contribution>* record) {
  const auto& list =
      prep.tiles[static_cast<std::size_t>((py / kTileSize) * prep.tiles_x + px / kTileSize)];
  const Vec2 rho(px + 0.5, py + 0.5);
  double t = 1.0;
  for (int id : list) {
    const Prepared& p = prep.data[static_cast<std::size_t>(id)];
    const Vec2 d = p.mu2d - rho;
    if (std::abs(d.x()) > p.radius || std::abs(d.y()) > p.radius) continue;
    const double q = d.x() * (p.inv_cov2d(0, 0) * d.x() + p.inv_cov2d(0, 1) * d.y()) +
                     d.y() * (p.inv_cov2d(1, 0) * d.x() + p.inv_cov2d(1, 1) * d.y());
    double a = p.opacity * std::exp(-0.5 * q);
    if (a < kAlphaSkip) continue;
    if (a > kAlphaClamp) a = kAlphaClamp;
    color += p.color * (a * t);
    depth += p.depth * (a * t);
    normal_raw += p.normal * (a * t);
    alpha_out += a * t;
    if (record != nullptr) record->push_back({id, a, t});
    t *= 1.0 - a;
    if (opts.early_termination && t < kTransmittanceMin) break;
  }
}

}  // namespace

RenderBuffers render(const GaussianMap& map, const Camera& cam, const RenderOptions& opts) {
  RenderBuffers out(cam.width, cam.height);
  const Prep prep = prepare(map, cam);

#pragma omp parallel for schedule(static)
  for (int py = 0; py < cam.height; ++py) {
    for (int px = 0; px < cam.width; ++px) {
      Vec3 color = Vec3::Zero(), normal = Vec3::Zero();
      double depth = 0.0, alpha = 0.0;
      composite_pixel(prep, px, py, opts, color, depth, normal, alpha, nullptr);
      const std::size_t pix = static_cast<std::size_t>(py * cam.width + px);
      const double nn = normal.norm();
      if (nn > 1e-12) normal /= nn; else normal.setZero();
      for (int c = 0; c < 3; ++c) {
        out.color[3 * pix + c] = color[c];
        out.normal[3 * pix + c] = normal[c];
      }
      out.depth[pix] = depth;
      out.alpha[pix] = alpha;
    }
  }
  return out;
}

void GradientBuffers::resize(std::size_t n) {
  d_mu.assign(n, Vec3::Zero());
  d_logit.assign(n, 0.0);
  d_log_scale.assign(n, Vec3::Zero());
  d_rotation.assign(n, Eigen::Vector4d::Zero());
  d_color.assign(n, Vec3::Zero());
  pos2d_grad_mag.assign(n, 0.0);
  visible.assign(n, 0);
}

namespace {

/// Raw per-gaussian accumulators in projected space, flattened for
/// deterministic per-thread reduction: [d_mu2d(2), d_cov2d(3: 00,01,11),
/// d_logit, d_color(3), d_depth, d_normal(3)] = 13 doubles.
constexpr int kAccStride = 13;

struct PixelGrads {
  Vec3 g_color = Vec3::Zero();
  double g_depth_raw = 0.0;
  double g_alpha = 0.0;
  Vec3 g_normal_raw = Vec3::Zero();
};

void backward_pixel(const Prep& prep, int px, int py, const PixelGrads& pg,
                    const Contribution* contribs, std::size_t n_contribs, double* acc) {
  const Vec2 rho(px + 0.5, py + 0.5);

  // Reverse scan with suffix sums S_x = sum_{j>i} x_j a_j T_j so that
  // dC/da_i = c_i T_i - S_c / (1 - a_i), and likewise for depth/normal/alpha.
  Vec3 suffix_c = Vec3::Zero();
  Vec3 suffix_n = Vec3::Zero();
  double suffix_d = 0.0;
  double suffix_a = 0.0;
  for (std::size_t ci = n_contribs; ci-- > 0;) {
    const Contribution& con = contribs[ci];
    const Prepared& p = prep.data[static_cast<std::size_t>(con.id)];
    const double at = con.alpha * con.t_before;
    const double inv_one_minus = 1.0 / (1.0 - con.alpha);

    double* slot = acc + static_cast<std::ptrdiff_t>(con.id) * kAccStride;

    // Direct value gradients.
    slot[6 + 0] += pg.g_color.x() * at;
    slot[6 + 1] += pg.g_color.y() * at;
    slot[6 + 2] += pg.g_color.z() * at;
    if (!p.sky) {
      slot[9] += pg.g_depth_raw * at;
      slot[10 + 0] += pg.g_normal_raw.x() * at;
      slot[10 + 1] += pg.g_normal_raw.y() * at;
      slot[10 + 2] += pg.g_normal_raw.z() * at;
    }

    // Gradient w.r.t. alpha, split into color and geometric paths so that
    // sky gaussians keep only the color part.
    const double da_color =
        pg.g_color.dot(p.color * con.t_before - suffix_c * inv_one_minus);
    double da = da_color;
    if (!p.sky) {
      da += pg.g_depth_raw * (p.depth * con.t_before - suffix_d * inv_one_minus);
      da += pg.g_normal_raw.dot(p.normal * con.t_before - suffix_n * inv_one_minus);
      da += pg.g_alpha * (con.t_before - suffix_a * inv_one_minus);
    }

    suffix_c += p.color * at;
    suffix_d += p.depth * at;
    suffix_n += p.normal * at;
    suffix_a += at;

    // Alpha saturated at the clamp: no gradient flows upstream of it.
    if (con.alpha >= kAlphaClamp) continue;

    // a = o * exp(-q/2):  da/do = a/o,  da/dq = -a/2.
    const double d_opacity = da * con.alpha / p.opacity;
    slot[5] += d_opacity * p.opacity * (1.0 - p.opacity);  // chain through sigmoid
    const double dq = -0.5 * con.alpha * da;

    const Vec2 d2 = p.mu2d - rho;
    const Vec2 md = p.inv_cov2d * d2;
    // q = d^T M d:  dq/d(mu2d) = 2 M d,  dq/dSigma' = -M d d^T M.
    slot[0] += dq * 2.0 * md.x();
    slot[1] += dq * 2.0 * md.y();
    slot[2] += dq * -(md.x() * md.x());
    slot[3] += dq * -(md.x() * md.y());
    slot[4] += dq * -(md.y() * md.y());
  }
}

/// Chains projected-space accumulators back to gaussian parameters.
void finalize_gaussian(const Prepared& p, const Camera& cam, const double* slot,
                       std::size_t gi, GradientBuffers& grads) {
  const Vec2 d_mu2d(slot[0], slot[1]);
  Mat2 d_cov2d;
  d_cov2d << slot[2], slot[3], slot[3], slot[4];
  const double d_logit = slot[5];
  const Vec3 d_color(slot[6], slot[7], slot[8]);
  const double d_depth = slot[9];
  const Vec3 d_normal(slot[10], slot[11], slot[12]);

  grads.d_color[gi] += d_color;
  grads.d_logit[gi] += d_logit;
  grads.pos2d_grad_mag[gi] = d_mu2d.norm();

  // Camera-frame point gradient: projection, blended depth, and the
  // Jacobian's own dependence on the point.
  Vec3 d_pc = p.jac.transpose() * d_mu2d;
  d_pc.z() += d_depth;

  const Eigen::Matrix<double, 2, 3> d_jac = 2.0 * d_cov2d * p.jac * p.cam_cov;
  const double z_inv = 1.0 / p.p_cam.z();
  const double z_inv2 = z_inv * z_inv;
  const double z_inv3 = z_inv2 * z_inv;
  d_pc.x() += d_jac(0, 2) * (-cam.fx * z_inv2);
  d_pc.y() += d_jac(1, 2) * (-cam.fy * z_inv2);
  d_pc.z() += d_jac(0, 0) * (-cam.fx * z_inv2) + d_jac(1, 1) * (-cam.fy * z_inv2) +
              d_jac(0, 2) * (2.0 * cam.fx * p.p_cam.x() * z_inv3) +
              d_jac(1, 2) * (2.0 * cam.fy * p.p_cam.y() * z_inv3);

  const Mat3& w = cam.world_to_camera.rotation;
  grads.d_mu[gi] += w.transpose() * d_pc;

  // Sigma' = J V J^T + floor, V = W Sigma W^T.
  const Mat3 d_v = p.jac.transpose() * d_cov2d * p.jac;
  const Mat3 d_sigma = w.transpose() * d_v * w;

  // Sigma = M M^T with M = R diag(s); d_sigma is symmetric by construction.
  const Mat3 m_rs = p.rot * p.scale.asDiagonal();
  const Mat3 d_m = 2.0 * d_sigma * m_rs;

  Vec3 d_scale = Vec3::Zero();
  Mat3 d_rot = Mat3::Zero();
  for (int j = 0; j < 3; ++j) {
    for (int i = 0; i < 3; ++i) {
      d_scale[j] += d_m(i, j) * p.rot(i, j);
      d_rot(i, j) += d_m(i, j) * p.scale[j];
    }
  }
  grads.d_log_scale[gi] += d_scale.cwiseProduct(p.scale);

  // Normal contribution: n = sign * R.col(min_axis); axis choice and sign
  // are treated as locally constant.
  d_rot.col(p.min_axis) += p.normal_sign * d_normal;

  // d_rot -> quaternion. The partials are odd in q, so they must be
  // evaluated at the same sign of the double cover as the stored value.
  const double qw = p.q_unit.w(), qx = p.q_unit.x(), qy = p.q_unit.y(), qz = p.q_unit.z();
  Mat3 dr_dw, dr_dx, dr_dy, dr_dz;
  dr_dw << 0, -qz, qy, qz, 0, -qx, -qy, qx, 0;
  dr_dx << 0, qy, qz, qy, -2 * qx, -qw, qz, qw, -2 * qx;
  dr_dy << -2 * qy, qx, qw, qx, 0, qz, -qw, qz, -2 * qy;
  dr_dz << -2 * qz, -qw, qx, qw, -2 * qz, qy, qx, qy, 0;
  Eigen::Vector4d d_qn;
  d_qn << 2.0 * (d_rot.array() * dr_dw.array()).sum(),
      2.0 * (d_rot.array() * dr_dx.array()).sum(),
      2.0 * (d_rot.array() * dr_dy.array()).sum(),
      2.0 * (d_rot.array() * dr_dz.array()).sum();
  grads.d_rotation[gi] += d_qn;  // normalization chain applied by the caller
}

}  // namespace

RenderLoss render_with_gradients(const GaussianMap& map, const Camera& cam,
                                 const ViewPriors& priors, const LossWeights& weights,
                                 const RenderOptions& opts) {
  RenderLoss loss;
  loss.grads.resize(map.size());
  const Prep prep = prepare(map, cam);
  for (int id : prep.order) loss.grads.visible[static_cast<std::size_t>(id)] = 1;

  const int w = cam.width, h = cam.height;
  const std::size_t n_pix = static_cast<std::size_t>(w * h);

  // Forward pass; raw (unnormalized) normals and the per-pixel contribution
  // lists are kept so the backward pass does not re-render.
  loss.buffers = RenderBuffers(w, h);
  std::vector<double> raw_normal(3 * n_pix, 0.0);
  std::vector<std::vector<Contribution>> row_contribs(static_cast<std::size_t>(h));
  std::vector<std::vector<std::uint32_t>> row_offsets(static_cast<std::size_t>(h));
#pragma omp parallel for schedule(static)
  for (int py = 0; py < h; ++py) {
    auto& contribs = row_contribs[static_cast<std::size_t>(py)];
    auto& offsets = row_offsets[static_cast<std::size_t>(py)];
    offsets.resize(static_cast<std::size_t>(w) + 1, 0);
    std::vector<Contribution> scratch;
    for (int px = 0; px < w; ++px) {
      scratch.clear();
      Vec3 color = Vec3::Zero(), normal = Vec3::Zero();
      double depth = 0.0, alpha = 0.0;
      composite_pixel(prep, px, py, opts, color, depth, normal, alpha, &scratch);
      contribs.insert(contribs.end(), scratch.begin(), scratch.end());
      offsets[static_cast<std::size_t>(px) + 1] = static_cast<std::uint32_t>(contribs.size());
      const std::size_t pix = static_cast<std::size_t>(py * w + px);
      for (int c = 0; c < 3; ++c) {
        loss.buffers.color[3 * pix + c] = color[c];
        raw_normal[3 * pix + c] = normal[c];
      }
      loss.buffers.depth[pix] = depth;
      loss.buffers.alpha[pix] = alpha;
      const double nn = normal.norm();
      if (nn > 1e-12) normal /= nn; else normal.setZero();
      for (int c = 0; c < 3; ++c) loss.buffers.normal[3 * pix + c] = normal[c];
    }
  }

  // Loss terms and per-pixel adjoints.
  std::vector<PixelGrads> pixel_grads(n_pix);

  // Photometric L1 with exponent gamma.
  const double l1_norm = 1.0 / static_cast<double>(3 * n_pix);
  double l1_sum = 0.0;
  for (std::size_t i = 0; i < 3 * n_pix; ++i) {
    const double diff = loss.buffers.color[i] - priors.image.data[i];
    const double mag = std::abs(diff);
    l1_sum += std::pow(mag, weights.gamma);
    double g = 0.0;
    if (mag > 1e-12) {
      g = weights.gamma * std::pow(mag, weights.gamma - 1.0) * (diff > 0.0 ? 1.0 : -1.0);
    }
    pixel_grads[i / 3].g_color[static_cast<int>(i % 3)] +=
        (1.0 - weights.lambda) * l1_norm * g;
  }
  loss.l1 = (1.0 - weights.lambda) * l1_sum * l1_norm;

  // SSIM term (1 - mean ssim), differentiated through the window statistics.
  if (weights.lambda > 0.0) {
    const SsimResult sr = ssim_with_gradient(loss.buffers.color_image(), priors.image);
    loss.ssim = weights.lambda * (1.0 - sr.mean);
    for (std::size_t i = 0; i < 3 * n_pix; ++i) {
      pixel_grads[i / 3].g_color[static_cast<int>(i % 3)] -= weights.lambda * sr.grad[i];
    }
  }

  // Depth L1 over pixels with a positive prior.
  if (weights.w_depth > 0.0) {
    std::size_t n_valid = 0;
    for (std::size_t i = 0; i < n_pix; ++i) {
      if (priors.depth_prior.data[i] > 0.0) ++n_valid;
    }
    if (n_valid > 0) {
      const double norm = weights.w_depth / static_cast<double>(n_valid);
      double sum = 0.0;
      for (std::size_t i = 0; i < n_pix; ++i) {
        if (priors.depth_prior.data[i] <= 0.0) continue;
        const double a = loss.buffers.alpha[i];
        double d_used = loss.buffers.depth[i];
        double dd_raw = 1.0, dd_alpha = 0.0;
        if (weights.normalize_depth) {
          const double denom = std::max(a, 1e-6);
          d_used = loss.buffers.depth[i] / denom;
          dd_raw = 1.0 / denom;
          dd_alpha = a > 1e-6 ? -loss.buffers.depth[i] / (denom * denom) : 0.0;
        }
        const double diff = d_used - priors.depth_prior.data[i];
        sum += std::abs(diff);
        const double sgn = diff > 0.0 ? 1.0 : (diff < 0.0 ? -1.0 : 0.0);
        pixel_grads[i].g_depth_raw += norm * sgn * dd_raw;
        pixel_grads[i].g_alpha += norm * sgn * dd_alpha;
      }
      loss.depth = norm * sum;
    }
  }

  // Normal similarity over pixels with a valid prior direction.
  if (weights.w_normal > 0.0) {
    std::size_t n_valid = 0;
    for (std::size_t i = 0; i < n_pix; ++i) {
      const Vec3 np(priors.normal_prior.data[3 * i], priors.normal_prior.data[3 * i + 1],
                    priors.normal_prior.data[3 * i + 2]);
      if (np.norm() > 0.5) ++n_valid;
    }
    if (n_valid > 0) {
      const double norm = weights.w_normal / static_cast<double>(n_valid);
      double sum = 0.0;
      for (std::size_t i = 0; i < n_pix; ++i) {
        const Vec3 np(priors.normal_prior.data[3 * i], priors.normal_prior.data[3 * i + 1],
                      priors.normal_prior.data[3 * i + 2]);
        if (np.norm() <= 0.5) continue;
        const Vec3 raw(raw_normal[3 * i], raw_normal[3 * i + 1], raw_normal[3 * i + 2]);
        const double rn = raw.norm();
        if (rn < 1e-12) {
          sum += 1.0;  // uncovered pixel against a valid prior
          continue;
        }
        const Vec3 nhat = raw / rn;
        sum += 1.0 - nhat.dot(np);
        const Vec3 g_nhat = -norm * np;
        const Vec3 g_raw = (g_nhat - nhat * nhat.dot(g_nhat)) / rn;
        pixel_grads[i].g_normal_raw += g_raw;
      }
      loss.normal = norm * sum;
    }
  }

  loss.total = loss.l1 + loss.ssim + loss.depth + loss.normal;

  // Backward pass over pixels into per-thread accumulators, reduced in
  // thread order so results do not depend on scheduling.
  const int n_threads = omp_get_max_threads();
  std::vector<std::vector<double>> thread_acc(
      static_cast<std::size_t>(n_threads),
      std::vector<double>(map.size() * kAccStride, 0.0));
#pragma omp parallel
  {
    double* acc = thread_acc[static_cast<std::size_t>(omp_get_thread_num())].data();
#pragma omp for schedule(static)
    for (int py = 0; py < h; ++py) {
      const auto& contribs = row_contribs[static_cast<std::size_t>(py)];
      const auto& offsets = row_offsets[static_cast<std::size_t>(py)];
      for (int px = 0; px < w; ++px) {
        const std::uint32_t begin = offsets[static_cast<std::size_t>(px)];
        const std::uint32_t end = offsets[static_cast<std::size_t>(px) + 1];
        backward_pixel(prep, px, py, pixel_grads[static_cast<std::size_t>(py * w + px)],
                       contribs.data() + begin, end - begin, acc);
      }
    }
  }
  std::vector<double>& acc = thread_acc[0];
  for (int t = 1; t < n_threads; ++t) {
    const std::vector<double>& other = thread_acc[static_cast<std::size_t>(t)];
    for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += other[i];
  }

#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t gi = 0; gi < static_cast<std::ptrdiff_t>(map.size()); ++gi) {
    const Prepared& p = prep.data[static_cast<std::size_t>(gi)];
    if (!p.valid) continue;
    finalize_gaussian(p, cam, acc.data() + gi * kAccStride, static_cast<std::size_t>(gi),
                      loss.grads);
    // Chain through quaternion normalization at the raw (stored) values.
    const Quat& q = map.gaussians[static_cast<std::size_t>(gi)].rotation;
    Eigen::Vector4d q_raw(q.w(), q.x(), q.y(), q.z());
    const double len = q_raw.norm();
    const Eigen::Vector4d q_unit = q_raw / len;
    Eigen::Vector4d& dq = loss.grads.d_rotation[static_cast<std::size_t>(gi)];
    dq = (dq - q_unit * q_unit.dot(dq)) / len;
  }
  return loss;
}

}  // namespace radmap
