//! DRAM latency model: address decoding, row-buffer outcomes and the
//! controller-cycle cost of each.

use memctl::dram::{decode_address, t_mem_rand, t_mem_seq, to_controller_cycles, BankState};
use memctl::DramTimingConfig;

fn main() {
    let t = DramTimingConfig::default();
    println!(
        "address map {} ({} banks), DRAM clock {} ps, controller clock {} ps",
        t.address_map, t.num_banks, t.t_mem_ps, t.t_fpga_ps
    );
    println!(
        "first access {} cycles, row hit {} cycles, row conflict {} cycles",
        to_controller_cycles(t.t_cl + t.t_rcd, &t),
        t_mem_seq(&t),
        t_mem_rand(&t)
    );

    let mut banks = BankState::new(t.num_banks);
    for addr in [0x0u64, 0x40, 0x80, 0x2_0000, 0x2000, 0x0] {
        let d = decode_address(addr, &t);
        let (mem, outcome) = banks.access_mem_cycles(d, &t);
        println!(
            "{addr:#8x}  row {:>3} bank {:>2} col {:>5}  {outcome:?}: {mem} DRAM cycles = {} controller cycles",
            d.row,
            d.bank,
            d.column,
            to_controller_cycles(mem, &t)
        );
    }
    println!("{:?}", banks.stats);
}
