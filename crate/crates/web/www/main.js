import init, { Knobs, render_ports, sweep, mermin } from "./pkg/ghz_optics_web.js";

const KNOBS = ["visibility", "bs_mzim_t", "bs_meas_t", "hwp_offset_deg", "dp_offset_deg", "angle_jitter_deg"];
const IMAGE_SIZE = 128;
const FRAMES = 9;

let knobs;

function readKnobs() {
  for (const k of KNOBS) {
    const input = document.getElementById(k);
    knobs[k] = parseFloat(input.value);
    input.nextElementSibling.textContent = knobs[k].toFixed(3);
  }
}

function writeKnobs(preset) {
  if (knobs) knobs.free();
  knobs = preset;
  for (const k of KNOBS) {
    document.getElementById(k).value = knobs[k];
  }
  readKnobs();
}

function drawPorts() {
  const setting = document.getElementById("setting").value;
  const img = render_ports(knobs, setting, IMAGE_SIZE);
  const canvas = document.getElementById("ports");
  canvas.width = img.width;
  canvas.height = img.height;
  const data = new ImageData(new Uint8ClampedArray(img.rgba), img.width, img.height);
  canvas.getContext("2d").putImageData(data, 0, 0);
  img.free();
}

function drawSweep() {
  const odd = document.getElementById("parity").value === "odd";
  const rows = sweep(knobs, odd, 181);
  const canvas = document.getElementById("sweep");
  const ctx = canvas.getContext("2d");
  const { width: w, height: h } = canvas;
  const pad = 20;
  ctx.clearRect(0, 0, w, h);
  ctx.strokeStyle = "#999";
  ctx.strokeRect(pad, pad, w - 2 * pad, h - 2 * pad);
  const x = (phi) => pad + (phi / (2 * Math.PI)) * (w - 2 * pad);
  const y = (v) => h - pad - v * (h - 2 * pad);
  for (const [col, color] of [[1, "#c33"], [2, "#36c"]]) {
    ctx.strokeStyle = color;
    ctx.lineWidth = 2;
    ctx.beginPath();
    for (let i = 0; i < rows.length; i += 3) {
      const px = x(rows[i]);
      const py = y(rows[i + col]);
      if (i === 0) ctx.moveTo(px, py);
      else ctx.lineTo(px, py);
    }
    ctx.stroke();
  }
}

function showMermin() {
  const v = mermin(knobs, FRAMES);
  const cell = (x) => `<td>${x.toFixed(3)}</td>`;
  const err = (x) => `<td>${Number.isNaN(x) ? "" : "±" + x.toFixed(3)}</td>`;
  document.getElementById("means").innerHTML = Array.from(v.slice(0, 5), cell).join("");
  document.getElementById("errs").innerHTML = Array.from(v.slice(5, 10), err).join("");
  const m = v[4];
  document.getElementById("verdict").textContent =
    m > 2 ? `M = ${m.toFixed(3)} > 2: the local-realistic bound is violated` : `M = ${m.toFixed(3)} ≤ 2: no violation`;
}

function refresh() {
  const error = document.getElementById("error");
  try {
    readKnobs();
    drawPorts();
    drawSweep();
    showMermin();
    error.textContent = "";
  } catch (e) {
    error.textContent = String(e);
  }
}

await init();
writeKnobs(Knobs.table1());
for (const k of KNOBS) {
  document.getElementById(k).addEventListener("input", refresh);
}
document.getElementById("setting").addEventListener("change", refresh);
document.getElementById("parity").addEventListener("change", refresh);
document.getElementById("ideal").addEventListener("click", () => { writeKnobs(Knobs.ideal()); refresh(); });
document.getElementById("table1").addEventListener("click", () => { writeKnobs(Knobs.table1()); refresh(); });
refresh();
