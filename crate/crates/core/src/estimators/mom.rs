use super::cloud::PointCloud;
use super::geomedian::geometric_median;
use super::{Estimate, EstimatorError, MomConfig};

/// Number of buckets used by [`mom_estimate`]:
/// `min(1 + ⌊3.5·ln(1/δ)⌋, max_buckets, n)`.
pub fn mom_bucket_count(cfg: &MomConfig, n: usize) -> usize {
    let from_delta = 1 + (3.5 * (1.0 / cfg.delta).ln()).floor() as usize;
    from_delta.min(cfg.max_buckets).min(n).max(1)
}

/// Median-of-means estimator for heavy-tailed clouds.
///
/// Partitions the cloud, in input order, into `b` blocks of `⌊n/b⌋` points
/// (any trailing remainder is discarded), averages each block, and returns
/// the geometric median of the block means. Depends on input order through
/// the block boundaries, but is deterministic for a fixed order.
pub fn mom_estimate(cloud: &PointCloud, cfg: &MomConfig) -> Result<Estimate, EstimatorError> {
    cfg.validate()?;
    if cloud.is_empty() {
        return Err(EstimatorError::EmptyCloud);
    }

    let n = cloud.len();
    let b = mom_bucket_count(cfg, n);
    let block_size = n / b;
    debug_assert!(block_size >= 1);

    let mut means = Vec::with_capacity(b);
    for block in 0..b {
        let start = block * block_size;
        let indices: Vec<usize> = (start..start + block_size).collect();
        means.push(cloud.select(&indices).mean());
    }

    geometric_median(
        &PointCloud::from_points(&means),
        cfg.weiszfeld_tol,
        cfg.weiszfeld_max_iter,
    )
}
