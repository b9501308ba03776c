//! Analog-prototype reference formulas used as independent oracles by unit
//! tests. Test-only: nothing here touches the digital filter code paths it
//! checks.

/// Bilinear-warped frequency ratio of `f` relative to a section designed at
/// `fc`: tan(pi f / fs) / tan(pi fc / fs).
pub fn warped_ratio(f: f64, fc: f64, fs: u32) -> f64 {
    let fs = fs as f64;
    (std::f64::consts::PI * f / fs).tan() / (std::f64::consts::PI * fc / fs).tan()
}

/// Second-order Butterworth low-pass magnitude at normalized frequency
/// `omega` (= f/fc in the analog domain), in dB.
pub fn analog_butterworth2_db(omega: f64) -> f64 {
    -10.0 * (1.0 + omega.powi(4)).log10()
}

/// Peaking prototype |H(j*omega)| in dB for boost `gain_db` and quality `q`:
/// H(s) = (s^2 + s*A/q + 1) / (s^2 + s/(A*q) + 1), A = 10^(gain/40).
pub fn analog_peak_db(omega: f64, q: f64, gain_db: f64) -> f64 {
    let a = 10f64.powf(gain_db / 40.0);
    let s2 = (1.0 - omega * omega).powi(2);
    let num = s2 + (omega * a / q).powi(2);
    let den = s2 + (omega / (a * q)).powi(2);
    10.0 * (num / den).log10()
}

/// IEC 61672 analog A-weighting magnitude in dB, normalized to 0 dB at
/// 1 kHz.
pub fn analog_a_weight_db(f: f64) -> f64 {
    fn ra(f: f64) -> f64 {
        let f2 = f * f;
        let c1 = 20.598997f64 * 20.598997;
        let c2 = 107.65265f64 * 107.65265;
        let c3 = 737.86223f64 * 737.86223;
        let c4 = 12194.217f64 * 12194.217;
        c4 * f2 * f2 / ((f2 + c1) * (f2 + c4) * ((f2 + c2) * (f2 + c3)).sqrt())
    }
    20.0 * (ra(f) / ra(1000.0)).log10()
}
