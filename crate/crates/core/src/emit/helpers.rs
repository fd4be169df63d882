// SPDX-License-Identifier: Apache-2.0

//! Fixed support modules instantiated by generated systems.

pub const FIFO: &str = "\
module llpm_fifo #(
  parameter WIDTH = 1,
  parameter DEPTH = 2,
  parameter AW = 1
) (
  input  wire             clk,
  input  wire             rst,
  input  wire [WIDTH-1:0] in_data,
  input  wire             in_valid,
  output wire             in_ready,
  output wire [WIDTH-1:0] out_data,
  output wire             out_valid,
  input  wire             out_ready
);
  reg [WIDTH-1:0] mem [0:DEPTH-1];
  reg [AW-1:0] rp;
  reg [AW-1:0] wp;
  reg [AW:0] count;
  wire push;
  wire pop;
  assign in_ready = count < DEPTH;
  assign out_valid = count != 0;
  assign out_data = mem[rp];
  assign push = in_valid & in_ready;
  assign pop = out_valid & out_ready;
  always @(posedge clk) begin
    if (push) begin
      mem[wp] <= in_data;
    end
  end
  always @(posedge clk) begin
    if (rst) begin
      rp <= 0;
      wp <= 0;
      count <= 0;
    end else begin
      if (push) begin
        wp <= (wp == DEPTH - 1) ? 0 : wp + 1;
      end
      if (pop) begin
        rp <= (rp == DEPTH - 1) ? 0 : rp + 1;
      end
      count <= count + push - pop;
    end
  end
endmodule
";

/// Dual-clock FIFO with Gray-coded pointers and two-flop synchronizers.
/// DEPTH must equal 2**AW.
pub const CDC_FIFO: &str = "\
module llpm_cdc_fifo #(
  parameter WIDTH = 1,
  parameter AW = 2
) (
  input  wire             wclk,
  input  wire             rclk,
  input  wire             rst,
  input  wire [WIDTH-1:0] in_data,
  input  wire             in_valid,
  output wire             in_ready,
  output wire [WIDTH-1:0] out_data,
  output wire             out_valid,
  input  wire             out_ready
);
  reg [WIDTH-1:0] mem [0:(1<<AW)-1];
  reg [AW:0] wbin;
  reg [AW:0] wgray;
  reg [AW:0] rbin;
  reg [AW:0] rgray;
  reg [AW:0] rgray_w1;
  reg [AW:0] rgray_w2;
  reg [AW:0] wgray_r1;
  reg [AW:0] wgray_r2;
  wire [AW:0] wbin_next;
  wire [AW:0] rbin_next;
  wire [AW:0] wfill;
  wire push;
  wire pop;
  function [AW:0] gray2bin;
    input [AW:0] g;
    integer i;
    begin
      gray2bin[AW] = g[AW];
      for (i = AW - 1; i >= 0; i = i - 1) begin
        gray2bin[i] = gray2bin[i + 1] ^ g[i];
      end
    end
  endfunction
  assign wfill = wbin - gray2bin(rgray_w2);
  assign in_ready = wfill != (1 << AW);
  assign out_valid = rgray != wgray_r2;
  assign out_data = mem[rbin[AW-1:0]];
  assign push = in_valid & in_ready;
  assign pop = out_valid & out_ready;
  assign wbin_next = wbin + push;
  assign rbin_next = rbin + pop;
  always @(posedge wclk) begin
    if (push) begin
      mem[wbin[AW-1:0]] <= in_data;
    end
  end
  always @(posedge wclk) begin
    if (rst) begin
      wbin <= 0;
      wgray <= 0;
      rgray_w1 <= 0;
      rgray_w2 <= 0;
    end else begin
      wbin <= wbin_next;
      wgray <= (wbin_next >> 1) ^ wbin_next;
      rgray_w1 <= rgray;
      rgray_w2 <= rgray_w1;
    end
  end
  always @(posedge rclk) begin
    if (rst) begin
      rbin <= 0;
      rgray <= 0;
      wgray_r1 <= 0;
      wgray_r2 <= 0;
    end else begin
      rbin <= rbin_next;
      rgray <= (rbin_next >> 1) ^ rbin_next;
      wgray_r1 <= wgray;
      wgray_r2 <= wgray_r1;
    end
  end
endmodule
";

pub const PERF_TAP: &str = "\
module llpm_perf_tap (
  input  wire        clk,
  input  wire        rst,
  input  wire        valid,
  input  wire        ready,
  output reg  [31:0] transfers,
  output reg  [31:0] stall_cycles,
  output reg  [31:0] idle_cycles
);
  always @(posedge clk) begin
    if (rst) begin
      transfers <= 32'd0;
      stall_cycles <= 32'd0;
      idle_cycles <= 32'd0;
    end else if (valid & ready) begin
      transfers <= transfers + 32'd1;
    end else if (valid) begin
      stall_cycles <= stall_cycles + 32'd1;
    end else begin
      idle_cycles <= idle_cycles + 32'd1;
    end
  end
endmodule
";
