//! One-hot view of an MVD raster, channel-major.

use crate::raster::MvdRaster;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OneHot {
    pub classes: usize,
    pub width: usize,
    pub height: usize,
    /// classes * width * height entries of {0, 1}, channel-major;
    /// channel order matches the legend order.
    pub data: Vec<u8>,
}

impl OneHot {
    pub fn channel(&self, c: usize) -> &[u8] {
        let n = self.width * self.height;
        &self.data[c * n..(c + 1) * n]
    }

    pub fn argmax(&self, pixel: usize) -> u8 {
        let n = self.width * self.height;
        for c in 0..self.classes {
            if self.data[c * n + pixel] == 1 {
                return c as u8;
            }
        }
        0
    }
}

pub fn one_hot(mvd: &MvdRaster) -> OneHot {
    let n = mvd.len();
    let classes = mvd.class_count();
    let mut data = vec![0u8; classes * n];
    for (i, &c) in mvd.class_index.iter().enumerate() {
        data[c as usize * n + i] = 1;
    }
    OneHot {
        classes,
        width: mvd.width,
        height: mvd.height,
        data,
    }
}
