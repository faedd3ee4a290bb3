#pragma once

// Desk-scale video quality analogs. They mirror the shape of the usual
// subject-consistency and temporal-flicker scores but are computed on the
// block-pooled features, so they are labelled "analog" wherever reported.

#include "noisesearch/tensor.hpp"

namespace noisesearch {

// mean_{i>=2} (<d_1, d_i> + <d_{i-1}, d_i>) / 2, mapped from [-1, 1] to [0, 1].
double subject_consistency(const Clip& video);

// 1 - mean |v_i - v_{i-1}| over adjacent frames and pixels, clamped to [0, 1].
double temporal_flicker(const Clip& video);

}  // namespace noisesearch
