//! Monte-Carlo BER of the legacy, oracle-CSI and training receivers on the
//! indoor channel, printed as CSV.
//!
//! cargo run --release --example ber_sweep

use randofdm::baseband::ModulationScheme;
use randofdm::channel::ChannelModel;
use randofdm::sim::{curve, run_sweep, snr_at_ber, to_csv, RxMode, SweepSpec};

fn main() -> randofdm::Result<()> {
    let spec = SweepSpec {
        snr_db: (0..=12).map(|s| f64::from(3 * s)).collect(),
        schemes: vec![ModulationScheme::Bpsk],
        channel: ChannelModel::indoor6(),
        modes: vec![RxMode::Legacy, RxMode::Oracle, RxMode::Training],
        n_packets: 300,
        n_data_symbols: 8,
        ..SweepSpec::default()
    };
    let records = run_sweep(&spec)?;
    print!("{}", to_csv(&records));
    for mode in &spec.modes {
        let at = snr_at_ber(&curve(&records, ModulationScheme::Bpsk, *mode), 1e-3);
        eprintln!(
            "{mode}: BER 1e-3 at {}",
            at.map_or("n/a".into(), |s| format!("{s:.1} dB"))
        );
    }
    Ok(())
}
