//! BER of the three eavesdropper receivers against the key holder, from
//! low to high SNR.
//!
//! cargo run --release --example eavesdropper

use randofdm::baseband::ModulationScheme;
use randofdm::channel::ChannelModel;
use randofdm::sim::{run_sweep, RxMode, SweepSpec};

fn main() -> randofdm::Result<()> {
    let spec = SweepSpec {
        snr_db: vec![0.0, 10.0, 20.0, 30.0, 40.0],
        schemes: vec![ModulationScheme::Qpsk],
        channel: ChannelModel::indoor6(),
        modes: vec![
            RxMode::Training,
            RxMode::EveIdentity,
            RxMode::EveRandom,
            RxMode::EveOracleCsi,
        ],
        n_packets: 40,
        n_data_symbols: 50,
        ..SweepSpec::default()
    };
    println!(
        "{:>16} {}",
        "mode",
        spec.snr_db.iter().map(|s| format!("{s:>8.0}")).collect::<String>()
    );
    let records = run_sweep(&spec)?;
    for mode in &spec.modes {
        let row: String = records
            .iter()
            .filter(|r| r.mode == *mode)
            .map(|r| format!("{:>8.4}", r.ber))
            .collect();
        println!("{:>16} {row}", mode.to_string());
    }
    Ok(())
}
