import init, { simulate_q, size_sweep, bias_audit } from "./pkg/crowdwise_wasm.js";

const $ = (id) => document.getElementById(id);
const num = (id) => Number($(id).value);

function guard(target, f) {
  try {
    f();
  } catch (e) {
    target.innerHTML = `<span class="err">${e.message ?? e}</span>`;
  }
}

function runQ() {
  guard($("q-out"), () => {
    $("q-out").textContent = simulate_q(num("q-acc"), num("q-rho"), 10, num("q-seed")).toFixed(3);
  });
}

function plotSweep(points) {
  const svg = $("s-plot");
  const W = svg.width.baseVal.value, H = svg.height.baseVal.value, pad = 36;
  const lo = Math.min(...points.map((p) => p.ci_low)) - 0.01;
  const hi = Math.max(...points.map((p) => p.ci_high)) + 0.01;
  const x = (s) => pad + ((s - 2) / 14) * (W - 2 * pad);
  const y = (a) => H - pad - ((a - lo) / (hi - lo)) * (H - 2 * pad);
  const band = points.map((p) => `${x(p.size)},${y(p.ci_high)}`)
    .concat(points.slice().reverse().map((p) => `${x(p.size)},${y(p.ci_low)}`)).join(" ");
  const line = points.map((p) => `${x(p.size)},${y(p.mean_accuracy)}`).join(" ");
  const ticks = points.map((p) => `<text x="${x(p.size)}" y="${H - pad + 16}" font-size="11" text-anchor="middle">${p.size}</text>`).join("");
  svg.innerHTML = `
    <polygon points="${band}" fill="#9ec3e6" opacity="0.5"/>
    <polyline points="${line}" fill="none" stroke="#1f5f99" stroke-width="2"/>
    ${ticks}
    <text x="4" y="${y(hi - 0.01) + 4}" font-size="11">${(hi - 0.01).toFixed(3)}</text>
    <text x="4" y="${y(lo + 0.01) + 4}" font-size="11">${(lo + 0.01).toFixed(3)}</text>
    <text x="${W / 2}" y="${H - 4}" font-size="11" text-anchor="middle">group size</text>`;
}

function runSweep() {
  guard($("s-plot"), () => {
    plotSweep(JSON.parse(size_sweep(num("s-acc"), num("s-rho"), num("s-rep"), num("s-seed"))));
  });
}

const bandClass = { "p<0.01": "p01", "p<0.05": "p05", "p<0.1": "p10" };

function runAudit() {
  guard($("b-out"), () => {
    const rows = JSON.parse(bias_audit(num("b-shift"), num("b-acc"), num("b-ppc"), num("b-seed")));
    const cols = rows[0].cells.map((c) => `${c.category} ${c.status}`);
    const cell = (c) => {
      const cls = bandClass[c.band] ?? "";
      return `<td>${c.accuracy?.toFixed(3) ?? ""}</td><td class="${cls}">${c.delta === null ? "" : (c.delta >= 0 ? "+" : "") + c.delta.toFixed(3)}</td>`;
    };
    $("b-out").innerHTML = `<table>
      <tr><th></th>${cols.map((c) => `<th colspan="2">${c}</th>`).join("")}</tr>
      <tr><th>row</th>${cols.map(() => "<th>acc</th><th>&Delta;</th>").join("")}</tr>
      ${rows.map((r) => `<tr><td>${r.label}</td>${r.cells.map(cell).join("")}</tr>`).join("")}
    </table>
    <p>&Delta; is the privileged group's mean likelihood minus the other group's on positive headlines; shading marks p &lt; 0.1 / 0.05 / 0.01.</p>`;
  });
}

await init();
$("q-rho").addEventListener("input", () => {
  $("q-rho-val").textContent = num("q-rho").toFixed(2);
  runQ();
});
$("q-run").addEventListener("click", runQ);
$("s-run").addEventListener("click", runSweep);
$("b-run").addEventListener("click", runAudit);
runQ();
