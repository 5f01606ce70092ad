// Copyright 2026 The LAD Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "lad/losses.h"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "lad/error.h"

namespace lad {
namespace {

void CheckFinite(const LogitsMap& logits, const char* what) {
  Require(logits.all_finite(), ErrorCode::kNumeric,
          std::string(what) + " logits contain NaN or Inf");
}

void CheckSameShape(const LogitsMap& a, const LogitsMap& b) {
  Require(a.same_shape(b), ErrorCode::kShapeMismatch,
          "logits shapes differ: " + a.shape_string() + " vs " +
              b.shape_string());
  Require(a.channels() >= 1, ErrorCode::kInvalidArgument,
          "logits need at least one class channel");
}

// Temperature-softened spatial softmax of one channel, returned as
// log-probabilities.
void SpatialLogSoftmax(std::span<const double> logits, double temperature,
                       std::vector<double>& out) {
  out.resize(logits.size());
  double peak = -INFINITY;
  for (double v : logits) peak = std::max(peak, v / temperature);
  double sum = 0.0;
  for (double v : logits) sum += std::exp(v / temperature - peak);
  const double log_norm = peak + std::log(sum);
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = logits[i] / temperature - log_norm;
  }
}

// (tau^2 / C) * sum_c KL(softmax(a_c / tau) || softmax(b_c / tau)) with
// gradients through either argument.
double ChannelKl(const LogitsMap& a, const LogitsMap& b, double temperature,
                 LogitsMap* grad_a, LogitsMap* grad_b) {
  CheckSameShape(a, b);
  Require(temperature > 0.0, ErrorCode::kInvalidArgument,
          "temperature must be > 0");
  CheckFinite(a, "teacher");
  CheckFinite(b, "student");
  const int classes = a.channels();
  const double scale = temperature * temperature / classes;
  if (grad_a) *grad_a = LogitsMap(a.channels(), a.height(), a.width());
  if (grad_b) *grad_b = LogitsMap(b.channels(), b.height(), b.width());

  std::vector<double> log_p;
  std::vector<double> log_q;
  double total = 0.0;
  for (int c = 0; c < classes; ++c) {
    SpatialLogSoftmax(a.channel(c), temperature, log_p);
    SpatialLogSoftmax(b.channel(c), temperature, log_q);
    double kl = 0.0;
    for (std::size_t i = 0; i < log_p.size(); ++i) {
      kl += std::exp(log_p[i]) * (log_p[i] - log_q[i]);
    }
    total += kl;
    // d/db = tau * (q - p) / C ; d/da = tau * p * (log p - log q - KL) / C
    if (grad_b) {
      auto g = grad_b->channel(c);
      for (std::size_t i = 0; i < g.size(); ++i) {
        g[i] = scale / temperature * (std::exp(log_q[i]) - std::exp(log_p[i]));
      }
    }
    if (grad_a) {
      auto g = grad_a->channel(c);
      for (std::size_t i = 0; i < g.size(); ++i) {
        g[i] = scale / temperature * std::exp(log_p[i]) *
               (log_p[i] - log_q[i] - kl);
      }
    }
  }
  // Rounding can push a KL of identical distributions a hair below zero.
  return std::max(0.0, scale * total);
}

void AddScaled(LogitsMap& dst, const LogitsMap& src, double factor) {
  auto d = dst.data();
  auto s = src.data();
  for (std::size_t i = 0; i < d.size(); ++i) d[i] += factor * s[i];
}

}  // namespace

double CrossEntropySeg(const LogitsMap& logits, const LabelMap& label,
                       LogitsMap* grad) {
  Require(logits.channels() >= 1, ErrorCode::kInvalidArgument,
          "logits need at least one class channel");
  Require(logits.channels() == label.num_classes() &&
              logits.height() == label.height() &&
              logits.width() == label.width(),
          ErrorCode::kShapeMismatch,
          "logits " + logits.shape_string() + " incompatible with " +
              std::to_string(label.num_classes()) + "-class label " +
              std::to_string(label.height()) + "x" +
              std::to_string(label.width()));
  CheckFinite(logits, "segmentation");
  const int classes = logits.channels();
  const std::size_t pixels = logits.plane_size();
  const std::size_t valid = label.count_valid();
  if (grad) *grad = LogitsMap(classes, logits.height(), logits.width());
  if (valid == 0) return 0.0;

  auto labels = label.data();
  auto data = logits.data();
  double sum = 0.0;
  std::vector<double> prob(classes);
  for (std::size_t i = 0; i < pixels; ++i) {
    if (labels[i] == LabelMap::kIgnore) continue;
    double peak = -INFINITY;
    for (int c = 0; c < classes; ++c) peak = std::max(peak, data[c * pixels + i]);
    double norm = 0.0;
    for (int c = 0; c < classes; ++c) {
      prob[c] = std::exp(data[c * pixels + i] - peak);
      norm += prob[c];
    }
    sum += peak + std::log(norm) - data[labels[i] * pixels + i];
    if (grad) {
      auto g = grad->data();
      for (int c = 0; c < classes; ++c) {
        double target = c == labels[i] ? 1.0 : 0.0;
        g[c * pixels + i] = (prob[c] / norm - target) / valid;
      }
    }
  }
  return sum / valid;
}

double CwdLoss(const LogitsMap& teacher, const LogitsMap& student,
               double temperature, LogitsMap* student_grad) {
  return ChannelKl(teacher, student, temperature, nullptr, student_grad);
}

double ConsistencyDistance(const LogitsMap& o1, const LogitsMap& o2,
                           double temperature, ConsistencyForm form,
                           LogitsMap* grad_o1, LogitsMap* grad_o2) {
  if (form == ConsistencyForm::kOneDirectional) {
    if (grad_o1) *grad_o1 = LogitsMap(o1.channels(), o1.height(), o1.width());
    return ChannelKl(o1, o2, temperature, nullptr, grad_o2);
  }
  const bool want_grad = grad_o1 || grad_o2;
  LogitsMap ga_fwd, gb_fwd, ga_bwd, gb_bwd;
  double forward = ChannelKl(o1, o2, temperature, want_grad ? &ga_fwd : nullptr,
                             want_grad ? &gb_fwd : nullptr);
  double backward = ChannelKl(o2, o1, temperature,
                              want_grad ? &ga_bwd : nullptr,
                              want_grad ? &gb_bwd : nullptr);
  if (grad_o1) {
    *grad_o1 = LogitsMap(o1.channels(), o1.height(), o1.width());
    AddScaled(*grad_o1, ga_fwd, 0.5);
    AddScaled(*grad_o1, gb_bwd, 0.5);
  }
  if (grad_o2) {
    *grad_o2 = LogitsMap(o2.channels(), o2.height(), o2.width());
    AddScaled(*grad_o2, gb_fwd, 0.5);
    AddScaled(*grad_o2, ga_bwd, 0.5);
  }
  return 0.5 * (forward + backward);
}

TeacherLossBreakdown TeacherLoss(const LogitsMap& o1, const LogitsMap& o2,
                                 const LabelMap& label,
                                 const LossWeights& weights,
                                 ConsistencyForm form, LogitsMap* grad_o1,
                                 LogitsMap* grad_o2) {
  Require(weights.lambda_consistency >= 0.0, ErrorCode::kInvalidArgument,
          "lambda must be >= 0");
  TeacherLossBreakdown out;
  LogitsMap ce_grad1, ce_grad2, d_grad1, d_grad2;
  out.ce_first = CrossEntropySeg(o1, label, grad_o1 ? &ce_grad1 : nullptr);
  out.ce_second = CrossEntropySeg(o2, label, grad_o2 ? &ce_grad2 : nullptr);
  out.consistency =
      ConsistencyDistance(o1, o2, weights.temperature, form,
                          grad_o1 ? &d_grad1 : nullptr,
                          grad_o2 ? &d_grad2 : nullptr);
  out.weighted_consistency = weights.lambda_consistency * out.consistency;
  out.total = out.ce_first + out.ce_second + out.weighted_consistency;
  if (grad_o1) {
    *grad_o1 = std::move(ce_grad1);
    AddScaled(*grad_o1, d_grad1, weights.lambda_consistency);
  }
  if (grad_o2) {
    *grad_o2 = std::move(ce_grad2);
    AddScaled(*grad_o2, d_grad2, weights.lambda_consistency);
  }
  return out;
}

StudentLossBreakdown StudentLoss(const LogitsMap& student,
                                 const LogitsMap& teacher,
                                 const LabelMap& label,
                                 const LossWeights& weights,
                                 LogitsMap* student_grad) {
  Require(weights.beta_kd >= 0.0, ErrorCode::kInvalidArgument,
          "beta must be >= 0");
  StudentLossBreakdown out;
  LogitsMap ce_grad, kd_grad;
  out.ce = CrossEntropySeg(student, label, student_grad ? &ce_grad : nullptr);
  out.kd = CwdLoss(teacher, student, weights.temperature,
                   student_grad ? &kd_grad : nullptr);
  out.weighted_kd = weights.beta_kd * out.kd;
  out.total = out.ce + out.weighted_kd;
  if (student_grad) {
    *student_grad = std::move(ce_grad);
    AddScaled(*student_grad, kd_grad, weights.beta_kd);
  }
  return out;
}

}  // namespace lad
