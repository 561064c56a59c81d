use alloc::vec::Vec;

use super::math;

/// Probabilities are clamped to `[PROB_EPS, 1 - PROB_EPS]` before logs.
pub const PROB_EPS: f64 = 1e-7;

/// Softmax cross-entropy. Returns the loss and its gradient w.r.t. `logits`.
pub fn cross_entropy(logits: &[f64], class: usize) -> (f64, Vec<f64>) {
    let probs = super::softmax(logits);
    let loss = -math::ln(probs[class].max(f64::MIN_POSITIVE));
    let mut grad = probs;
    grad[class] -= 1.0;
    (loss, grad)
}

/// Binary cross-entropy on a probability. Returns the loss and d loss / d prob.
/// Outside the clamp range the gradient is that of the clamped point.
pub fn binary_cross_entropy(prob: f64, target: f64) -> (f64, f64) {
    let p = prob.clamp(PROB_EPS, 1.0 - PROB_EPS);
    let loss = -(target * math::ln(p) + (1.0 - target) * math::ln(1.0 - p));
    let grad = (p - target) / (p * (1.0 - p));
    (loss, grad)
}

/// Binary cross-entropy of `sigmoid(logit)`, computed stably.
/// Returns the loss and d loss / d logit.
pub fn binary_cross_entropy_with_logit(logit: f64, target: f64) -> (f64, f64) {
    // log(1 + e^-|x|) + max(x, 0) - x * y
    let loss = logit.max(0.0) - logit * target + math::ln(1.0 + math::exp(-logit.abs()));
    (loss, super::sigmoid(logit) - target)
}
