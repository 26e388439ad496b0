// Display helpers. Amounts arrive as decimal strings (wei scale, can be
// hundreds of bits), so formatting works on the digits directly instead
// of going through Number and losing precision.

const SIG_DIGITS = 4;

export function sciAmount(raw: string): string {
  let s = raw.trim();
  let sign = "";
  if (s.startsWith("-")) {
    sign = "-";
    s = s.slice(1);
  }
  s = s.replace(/^0+/, "");
  if (s === "") return "0";
  if (!/^[0-9]+$/.test(s)) return raw; // not a plain integer, show as-is
  const exp = s.length - 1;
  let mantissa = s.slice(0, SIG_DIGITS);
  while (mantissa.length > 1 && mantissa.endsWith("0")) {
    mantissa = mantissa.slice(0, -1);
  }
  const head = mantissa.length > 1
    ? mantissa[0] + "." + mantissa.slice(1)
    : mantissa;
  if (exp === 0) return sign + head;
  return `${sign}${head}e${exp}`;
}

export function amountTitle(raw: string, asset: string): string {
  return `${raw} ${assetLabel(asset)}`;
}

export function assetLabel(asset: string): string {
  if (asset === "ether") return "ETH";
  if (asset.startsWith("token:")) return shortHex(asset.slice(6));
  if (asset.startsWith("erc721:")) return "NFT " + shortHex(asset.slice(7));
  return asset;
}

export function shortHex(hex: string): string {
  if (hex.length <= 12) return hex;
  return hex.slice(0, 8) + ".." + hex.slice(-4);
}

export function epsilonText(epsilon: number): string {
  // Epsilon only ever halves, so it stays exactly representable.
  return String(epsilon);
}

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}
