//! The stages behind the subcommands, shared by one-shot and piecewise runs.

use dcnet_core::network::replay_merged;
use dcnet_core::{
    analytic_matrix, dissect, liquidity_stream, merge_streams, InfoSummary, IntrinsicEvent,
    LiquiditySample, PriceSeries, TransitionMatrix, TransitionRecord,
};

use crate::config::RunConfig;
use crate::error::Result;

/// Directional changes of every threshold in `(time, threshold)` order.
pub fn events(series: &PriceSeries, config: &RunConfig) -> Result<Vec<IntrinsicEvent>> {
    let ladder = config.ladder.build()?;
    let streams = dissect(series, &ladder, config.replay.initial_mode.into())?;
    Ok(merge_streams(&streams))
}

pub fn transitions(events: &[IntrinsicEvent], config: &RunConfig) -> Result<Vec<TransitionRecord>> {
    let n = config.ladder.build()?.len();
    let mut sorted = events.to_vec();
    sorted.sort_by_key(|e| (e.confirm_time, e.threshold_index));
    Ok(replay_merged(
        &sorted,
        n,
        config.replay.initial_mode.into(),
        config.replay.warmup.into(),
    )?)
}

/// Analytic model of the configured ladder with its informativeness.
pub fn model(config: &RunConfig) -> Result<(TransitionMatrix, InfoSummary)> {
    let matrix = analytic_matrix(&config.ladder.build()?)?;
    let info = InfoSummary::compute(&matrix, &config.h2_options())?;
    Ok((matrix, info))
}

pub fn liquidity(records: &[TransitionRecord], config: &RunConfig) -> Result<Vec<LiquiditySample>> {
    let (matrix, info) = model(config)?;
    Ok(liquidity_stream(
        records,
        &matrix,
        &info,
        &config.liquidity_config(),
    )?)
}

pub fn liquidity_from_ticks(
    series: &PriceSeries,
    config: &RunConfig,
) -> Result<Vec<LiquiditySample>> {
    let records = transitions(&events(series, config)?, config)?;
    liquidity(&records, config)
}
