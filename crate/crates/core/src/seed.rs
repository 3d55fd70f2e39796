/// Mix a base seed with a path of integers (layer, epoch, batch, ...) into a
/// new, well-spread seed. Uses the splitmix64 finalizer.
pub fn derive_seed(base: u64, path: &[u64]) -> u64 {
    let mut s = base ^ 0x5E_ED_0F_3A_11_u64;
    for &p in path {
        s = mix(s ^ mix(p.wrapping_add(0x9E37_79B9_7F4A_7C15)));
    }
    mix(s)
}

fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
