//! First-order radio energy model.

/// Per-packet transmit/receive costs: `tx(d) = e_elec*b + eps_amp*b*d^2`,
/// `rx = e_elec*b`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadioModel {
    /// Electronics energy, J/bit.
    pub e_elec: f64,
    /// Amplifier energy, J/bit/m^2.
    pub eps_amp: f64,
    /// Packet size in bits.
    pub packet_bits: f64,
}

impl RadioModel {
    pub fn tx_energy(&self, distance: f64) -> f64 {
        self.e_elec * self.packet_bits + self.eps_amp * self.packet_bits * distance * distance
    }

    pub fn rx_energy(&self) -> f64 {
        self.e_elec * self.packet_bits
    }
}

impl Default for RadioModel {
    fn default() -> Self {
        Self {
            e_elec: 50e-9,
            eps_amp: 10e-12,
            packet_bits: 4000.0,
        }
    }
}
