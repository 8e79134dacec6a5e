#pragma once

#include "radmap/gaussian.hpp"
#include "radmap/image.hpp"

namespace radmap {

/// Per-view outputs of front-to-back alpha compositing. Depth is the
/// alpha-weighted blend without transmittance normalization; the normal
/// buffer is normalized to unit length per pixel (zero where uncovered).
struct RenderBuffers {
  int width = 0;
  int height = 0;
  std::vector<double> color;   // 3 * W * H, row-major interleaved
  std::vector<double> depth;   // W * H
  std::vector<double> normal;  // 3 * W * H
  std::vector<double> alpha;   // W * H

  RenderBuffers() = default;
  RenderBuffers(int w, int h)
      : width(w),
        height(h),
        color(static_cast<std::size_t>(3 * w * h), 0.0),
        depth(static_cast<std::size_t>(w * h), 0.0),
        normal(static_cast<std::size_t>(3 * w * h), 0.0),
        alpha(static_cast<std::size_t>(w * h), 0.0) {}

  ImageRGB color_image() const {
    ImageRGB img(width, height);
    img.data = color;
    return img;
  }
};

/// Ingested per-view supervision: ground-truth color, metric depth,
/// world-frame normals and a 2D sky mask.
struct ViewPriors {
  ImageRGB image;
  ImageGray depth_prior;
  ImageRGB normal_prior;  // components in [-1, 1], zero where invalid
  ImageMask sky2d;        // 255 = sky
};

struct RenderOptions {
  bool early_termination = true;  // stop once transmittance < 1e-4
};

RenderBuffers render(const GaussianMap& map, const Camera& cam, const RenderOptions& opts = {});

struct LossWeights {
  double lambda = 0.1;   // SSIM share of the photometric term
  double gamma = 1.0;    // exponent of the L1 term
  double w_depth = 1.0;
  double w_normal = 1.0;
  bool normalize_depth = false;  // divide blended depth by accumulated alpha
};

/// Analytic gradients per gaussian parameter, plus the screen-space
/// position-gradient magnitude used by densification.
struct GradientBuffers {
  std::vector<Vec3> d_mu;
  std::vector<double> d_logit;
  std::vector<Vec3> d_log_scale;
  std::vector<Eigen::Vector4d> d_rotation;  // (w, x, y, z), raw quaternion
  std::vector<Vec3> d_color;
  std::vector<double> pos2d_grad_mag;
  std::vector<std::uint8_t> visible;  // projected inside the view

  void resize(std::size_t n);
};

struct RenderLoss {
  double total = 0.0;
  double l1 = 0.0;
  double ssim = 0.0;
  double depth = 0.0;
  double normal = 0.0;
  RenderBuffers buffers;
  GradientBuffers grads;
};

/// Renders the view and differentiates
///   (1-lambda) mean |C-I|^gamma + lambda (1 - SSIM)
///   + w_d mean |D-Dp| + w_n mean (1 - N.Np)
/// w.r.t. every gaussian parameter. Depth/normal means run over pixels with
/// a valid prior; sky-flagged gaussians receive color-path gradients only.
RenderLoss render_with_gradients(const GaussianMap& map, const Camera& cam,
                                 const ViewPriors& priors, const LossWeights& weights,
                                 const RenderOptions& opts = {});

}  // namespace radmap
