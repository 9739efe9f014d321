//! Intra mode ids and the angular displacement table.

/// Intra prediction mode: 0 = planar, 1 = DC, 2..=34 = angular.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct IntraMode(u8);

pub const MODE_COUNT: usize = 35;
pub const PLANAR: IntraMode = IntraMode(0);
pub const DC: IntraMode = IntraMode(1);

impl IntraMode {
    pub fn new(id: u8) -> IntraMode {
        assert!(id < MODE_COUNT as u8, "intra mode id out of range");
        IntraMode(id)
    }

    #[inline]
    pub fn id(self) -> u8 {
        self.0
    }

    #[inline]
    pub fn is_angular(self) -> bool {
        self.0 >= 2
    }

    /// Displacement in 1/32-pel units per step toward the reference line.
    /// Only meaningful for angular modes.
    #[inline]
    pub fn angle(self) -> i32 {
        debug_assert!(self.is_angular());
        ANGLES[self.0 as usize - 2]
    }

    /// Iterator over all 35 modes in ascending id order.
    pub fn all() -> impl Iterator<Item = IntraMode> {
        (0..MODE_COUNT as u8).map(IntraMode)
    }
}

/// Displacement per angular mode 2..=34: mode 10 is pure horizontal, mode 26
/// pure vertical, modes 2 and 34 are the +-45 degree diagonals.
const ANGLES: [i32; 33] = [
    32, 26, 21, 17, 13, 9, 5, 2, 0, -2, -5, -9, -13, -17, -21, -26, -32, // modes 2..=18
    -26, -21, -17, -13, -9, -5, -2, 0, 2, 5, 9, 13, 17, 21, 26, 32, // modes 19..=34
];

/// Inverse-angle scale used to extend the main reference array from the side
/// reference array for negative displacements: round(256 * 32 / |angle|).
pub fn inverse_angle(angle: i32) -> i32 {
    let a = angle.unsigned_abs() as i32;
    debug_assert!(a > 0);
    (8192 + a / 2) / a
}
