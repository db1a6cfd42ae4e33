fn main() { let a = rug::Integer::from(12345u64).pow(100u32); println!("{}", a.significant_bits()); }
